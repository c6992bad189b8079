import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import Sys, in_hull, weak_reach

from probchar import TAU, Dist, DivergenceError, parse_plts, refusal_reachable, strong_successors, weak_successors
from probchar.generate import GenParams, random_plts, tau_free
from probchar.polytope import Polytope
from probchar.weak import weak_tau_polytope, weak_table

from conftest import plts_from


def test_strong_successor_examples():
    p = plts_from("states: s v w x\ns a -> 1/2 v, 1/2 w\n")
    assert strong_successors(p, Dist.point("s"), "a").generators == (Dist({"v": F(1, 2), "w": F(1, 2)}),)
    q = plts_from("states: s v w\ns a -> v\ns a -> w\n")
    poly = strong_successors(q, Dist.point("s"), "a")
    assert set(poly.generators) == {Dist.point("v"), Dist.point("w")}
    assert poly.contains(Dist({"v": F(1, 2), "w": F(1, 2)}))
    r = plts_from("states: s t v\ns a -> v\n")
    assert strong_successors(r, Dist({"s": F(1, 2), "t": F(1, 2)}), "a").is_empty


def test_tau_closure_examples():
    p = plts_from("states: s\n")
    assert weak_tau_polytope(p, "s").generators == (Dist.point("s"),)
    q = plts_from("states: s t\ns tau -> t\n")
    assert set(weak_tau_polytope(q, "s").generators) == {Dist.point("s"), Dist.point("t")}
    r = plts_from("states: s t u\ns tau -> 1/2 t, 1/2 u\nt tau -> u\n")
    assert weak_tau_polytope(r, "s").contains(Dist({"t": F(1, 4), "u": F(3, 4)}))


def test_saturation():
    p = plts_from("states: s t u\ns tau -> t\nt a -> u\n")
    assert weak_successors(p, Dist.point("s"), "a").contains(Dist.point("u"))
    assert strong_successors(p, Dist.point("s"), "a").is_empty


def test_divergent_systems_are_refused():
    p = plts_from("states: s\ns tau -> s\n")
    with pytest.raises(DivergenceError, match="divergent pLTS"):
        weak_successors(p, Dist.point("s"), "a")


def test_refusal_examples():
    dead = plts_from("states: s\n")
    assert refusal_reachable(dead, Dist.point("s"), {"a", "b"})
    loop = plts_from("states: s\ns a -> s\n")
    assert not refusal_reachable(loop, Dist.point("s"), {"a"})
    escape = plts_from("states: s t\ns tau -> t\ns a -> s\n")
    assert refusal_reachable(escape, Dist.point("s"), {"a"})


def _params(seed):
    rng = random.Random(seed)
    return GenParams(states=rng.randint(1, 4), actions=2, max_transitions=2, tau_probability=0.5)


@settings(max_examples=40)
@given(st.integers(0, 100_000))
def test_weak_successors_match_bounded_enumeration(seed):
    p = random_plts(random.Random(seed), _params(seed))
    sys = Sys.of(p)
    depth = len(p.states) + 1
    for s in p.states:
        for a in p.actions_tau:
            poly = weak_successors(p, Dist.point(s), a)
            reach = weak_reach(sys, {s: F(1)}, a, depth)
            for g in poly.generators:
                assert in_hull(dict(g), reach, p.states)
            for r in reach:
                assert poly.contains(Dist(r))


@given(st.integers(0, 100_000))
def test_tau_closure_is_reflexive_and_closed(seed):
    p = random_plts(random.Random(seed), _params(seed))
    for s in p.states:
        poly = weak_tau_polytope(p, s)
        assert poly.contains(Dist.point(s))
        for g in poly.generators:
            for step in strong_successors(p, g, TAU, hat=True).generators:
                assert poly.contains(step)


@given(st.integers(0, 100_000))
def test_tau_free_weak_equals_strong(seed):
    p = random_plts(random.Random(seed), tau_free(_params(seed)))
    for s in p.states:
        for a in p.actions:
            assert weak_successors(p, Dist.point(s), a) == strong_successors(p, Dist.point(s), a)


@given(st.integers(0, 100_000))
def test_pruning_keeps_membership(seed):
    rng = random.Random(seed)
    states = ["x0", "x1", "x2", "x3"]
    gens = [_grid(rng, states) for _ in range(rng.randint(1, 7))]
    full = Polytope(states, gens)
    pruned = full.pruned()
    for i in range(100):
        d = _grid(rng, states)
        assert full.contains(d) == pruned.contains(d)
        if i % 10 == 0:
            assert full.contains(d) == in_hull(dict(d), [dict(g) for g in gens], states)


def _grid(rng, states, den=4):
    w = [rng.randint(0, den) for _ in states]
    if not any(w):
        w[0] = 1
    return Dist({s: F(x, sum(w)) for s, x in zip(states, w) if x})


@given(st.integers(0, 100_000))
def test_refusal_reachable_definition(seed):
    p = random_plts(random.Random(seed), _params(seed))
    from probchar import refuses

    for s in p.states:
        closure = weak_successors(p, Dist.point(s), TAU)
        for A in ({"a"}, {"b"}, {"a", "b"}, set()):
            direct = any(refuses(p, g, A) for g in closure.generators)
            assert refusal_reachable(p, Dist.point(s), A) == direct


def test_table_is_cached():
    p = plts_from("states: s t\ns tau -> t\n")
    assert weak_table(p) is weak_table(p)
