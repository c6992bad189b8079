import random
from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st
from oracles import dist, feasible, lifts

from probchar import Dist, StateDistRelation, StateRelation, convex_combine, lift_check, lift_check_equivalence
from probchar.lifting import decompose, is_witness, lift_check_sd
from probchar.polytope import Polytope

from conftest import distributions

STATES = ["u0", "u1", "u2", "u3", "u4"]


def example():
    R = StateRelation({("s1", "t1"), ("s1", "t2"), ("s2", "t3"), ("s3", "t3")})
    delta = Dist({"s1": F(1, 2), "s2": F(1, 4), "s3": F(1, 4)})
    theta = Dist({"t1": F(1, 3), "t2": F(1, 6), "t3": F(1, 2)})
    return R, delta, theta


def test_lifting_example_witness_and_decomposition():
    R, delta, theta = example()
    w = lift_check(R, delta, theta)
    assert w is not None
    assert is_witness(R, delta, theta, w)
    parts = decompose(delta, theta, w)
    assert sorted(p for p, _, _ in parts) == [F(1, 6), F(1, 4), F(1, 4), F(1, 3)]
    assert convex_combine((p, Dist.point(s)) for p, s, _ in parts) == delta
    assert convex_combine((p, Dist.point(t)) for p, _, t in parts) == theta


def test_identity_lifting():
    R = StateRelation((s, s) for s in STATES)
    d = Dist({"u0": F(1, 3), "u1": F(2, 3)})
    assert lift_check(R, d, d) is not None
    assert lift_check(R, d, Dist({"u0": F(2, 3), "u1": F(1, 3)})) is None


def test_missing_pair_blocks_lifting():
    R = StateRelation({("s", "t1")})
    assert lift_check(R, Dist.point("s"), Dist({"t1": F(1, 2), "t2": F(1, 2)})) is None


def test_identity_decomposition():
    d = Dist.point("s")
    w = lift_check(StateRelation({("s", "s")}), d, d)
    assert decompose(d, d, w) == [(1, "s", "s")]


def test_equivalence_guard():
    with pytest.raises(ValueError):
        lift_check_equivalence(StateRelation({("a", "b")}, ["a", "b"], ["a", "b"]), Dist.point("a"), Dist.point("b"))


def test_total_relation_always_lifts():
    R = StateRelation((s, t) for s in STATES for t in STATES)
    assert lift_check_equivalence(R, Dist.point("u0"), Dist({"u1": F(1, 2), "u2": F(1, 2)}))


@st.composite
def relations(draw, left, right):
    pairs = [(s, t) for s in left for t in right]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs)))
    return StateRelation(chosen, left, right)


@given(st.data())
def test_lift_check_matches_hall_criterion(data):
    left, right = STATES[:3], STATES[:4]
    R = data.draw(relations(left, right))
    delta = data.draw(distributions(left))
    theta = data.draw(distributions(right))
    w = lift_check(R, delta, theta)
    assert (w is not None) == lifts(R.pairs, dict(delta), dict(theta))
    if w is not None:
        assert is_witness(R, delta, theta, w)


@given(st.data())
def test_linearity(data):
    R = data.draw(relations(STATES[:3], STATES[:3]))
    d1, d2, t1, t2 = (data.draw(distributions(STATES[:3])) for _ in range(4))
    if lift_check(R, d1, t1) is None or lift_check(R, d2, t2) is None:
        return
    p = F(data.draw(st.integers(0, 8)), 8)
    mix_d = convex_combine([(p, d1), (1 - p, d2)])
    mix_t = convex_combine([(p, t1), (1 - p, t2)])
    assert lift_check(R, mix_d, mix_t) is not None


@given(st.data())
def test_decomposability(data):
    R = data.draw(relations(STATES[:3], STATES[:3]))
    d1, d2, theta = (data.draw(distributions(STATES[:3])) for _ in range(3))
    p = F(data.draw(st.integers(1, 7)), 8)
    delta = convex_combine([(p, d1), (1 - p, d2)])
    w = lift_check(R, delta, theta)
    if w is None:
        return
    # split the witness proportionally to the share of each part at each source
    parts = []
    for di, pi in ((d1, p), (d2, 1 - p)):
        acc = {}
        for (s, t), mass in w.entries.items():
            share = pi * di.get(s) / delta[s]
            acc[t] = acc.get(t, 0) + mass * share / pi
        parts.append(Dist(acc))
    assert convex_combine([(p, parts[0]), (1 - p, parts[1])]) == theta
    assert lift_check(R, d1, parts[0]) is not None
    assert lift_check(R, d2, parts[1]) is not None


def _random_equivalence(rng, states):
    labels = {s: rng.randint(0, len(states) - 1) for s in states}
    return StateRelation(((s, t) for s in states for t in states if labels[s] == labels[t]), states, states)


@given(st.integers(0, 100_000), st.integers(1, 5))
def test_equivalence_check_agrees(seed, n):
    rng = random.Random(seed)
    states = STATES[:n]
    R = _random_equivalence(rng, states)
    for _ in range(5):
        delta = _grid_dist(rng, states)
        theta = _grid_dist(rng, states)
        assert lift_check_equivalence(R, delta, theta) == (lift_check(R, delta, theta) is not None)


def _grid_dist(rng, states, den=4):
    weights = [rng.randint(0, den) for _ in states]
    if not any(weights):
        weights[rng.randrange(len(states))] = 1
    total = sum(weights)
    return Dist({s: F(w, total) for s, w in zip(states, weights) if w})


def test_sd_lifting_examples():
    states = ["t1", "t2"]
    hull = Polytope(states, [Dist.point("t1"), Dist.point("t2")])
    R = StateDistRelation({"s": hull})
    assert lift_check_sd(R, Dist.point("s"), Dist({"t1": F(1, 3), "t2": F(2, 3)}))
    points = StateDistRelation({"s": Polytope(states, [Dist.point("t1")])})
    assert lift_check_sd(points, Dist.point("s"), Dist.point("t1"))
    assert not lift_check_sd(points, Dist.point("s"), Dist.point("t2"))


def _sd_oracle(per_state, delta, theta, states):
    """Variables: one convex coefficient per (support state, generator)."""
    cols = [(s, g) for s in delta for g in per_state[s]]
    if not cols:
        return False
    n = len(cols)
    eqs = []
    for s in delta:
        eqs.append(([1 if c[0] == s else 0 for c in cols], 1))
    for v in states:
        eqs.append(([delta[c[0]] * c[1].get(v, 0) for c in cols], theta.get(v, 0)))
    return feasible(n, eqs, []) is not None


@given(st.integers(0, 100_000))
def test_sd_lifting_matches_vertex_search(seed):
    rng = random.Random(seed)
    states = ["t0", "t1", "t2"]
    per_state = {}
    for s in ("s0", "s1", "s2"):
        per_state[s] = [_grid_dist(rng, states) for _ in range(rng.randint(1, 3))]
    delta = _grid_dist(rng, ["s0", "s1", "s2"], 3)
    theta = _grid_dist(rng, states, 3)
    R = StateDistRelation({s: Polytope(states, gens) for s, gens in per_state.items()})
    expect = _sd_oracle({s: [dist(g) for g in gens] for s, gens in per_state.items()}, dict(delta), dict(theta), states)
    assert lift_check_sd(R, delta, theta) == expect


def test_sd_with_point_polytopes_reduces_to_state_lifting():
    R = StateRelation({("a", "x"), ("b", "x"), ("b", "y")})
    states = ["x", "y"]
    # the lifted check with point polytopes asks for one target per source,
    # so a source related to two targets gets their hull
    sd = StateDistRelation(
        {s: Polytope(states, [Dist.point(t) for t in R.image(s)]) for s in ("a", "b")}
    )
    for delta in (Dist.point("a"), Dist({"a": F(1, 2), "b": F(1, 2)})):
        for theta in (Dist.point("x"), Dist({"x": F(1, 2), "y": F(1, 2)}), Dist({"x": F(3, 4), "y": F(1, 4)})):
            assert lift_check_sd(sd, delta, theta) == (lift_check(R, delta, theta) is not None)
