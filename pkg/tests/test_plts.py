import random
from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st
from oracles import Sys, has_tau_cycle

from probchar import (
    PLTS,
    TAU,
    Dist,
    DistributionError,
    ParseError,
    convex_combine,
    detect_divergence,
    parse_dist,
    parse_plts,
    refuses,
    serialize_plts,
)
from probchar.dist import format_dist
from probchar.generate import GenParams, random_dist, random_plts


def test_minimal_system():
    p = parse_plts("states: s\n")
    assert p.states == ("s",)
    assert p.transitions == ()


def test_single_transition():
    p = parse_plts("states: s v w\ns a -> 1/2 v, 1/2 w\n")
    assert p.transitions == (("s", "a", Dist({"v": F(1, 2), "w": F(1, 2)})),)


def test_weights_must_sum_to_one():
    with pytest.raises(ParseError, match="2/3"):
        parse_plts("states: s v w\ns a -> 1/3 v, 1/3 w\n")


@pytest.mark.parametrize(
    "text, where",
    [
        ("states: s s\n", (1, 11)),
        ("states: s\ns a -> 1 t\n", (2, 10)),
        ("states: s\ns a 1 s\n", (2, 5)),
        ("states: s\ns a -> 0.5 s, 0.5 s\n", (2, 8)),
        ("s a -> s\n", None),
    ],
)
def test_parse_errors_carry_positions(text, where):
    with pytest.raises(ParseError) as info:
        parse_plts(text)
    if where is not None:
        assert (info.value.line, info.value.column) == where


def test_comments_and_bare_targets():
    p = parse_plts("# header\nstates: s t  # two\nactions: a b\ns a -> t\n")
    assert p.actions == ("a", "b")
    assert p.moves("s", "a") == (Dist.point("t"),)


@given(st.integers(0, 10_000), st.integers(1, 6))
def test_format_round_trip(seed, n):
    p = random_plts(random.Random(seed), GenParams(states=n, actions=3))
    text = serialize_plts(p)
    again = parse_plts(text)
    assert again == p
    assert serialize_plts(again) == text


@given(st.integers(0, 10_000))
def test_stored_distributions_sum_to_one(seed):
    p = random_plts(random.Random(seed), GenParams(states=5, denominator=7))
    for _, _, d in p.transitions:
        assert sum(d.values()) == 1
        assert all(w > 0 for w in d.values())


def test_convex_combine():
    s1, s2, s3 = (Dist.point(x) for x in ("s1", "s2", "s3"))
    assert convex_combine([(1, s1)]) == s1
    assert convex_combine([(F(1, 2), s1), (F(1, 2), s1)]) == s1
    d = convex_combine([(F(1, 2), s1), (F(1, 4), s2), (F(1, 4), s3)])
    assert d == Dist({"s1": F(1, 2), "s2": F(1, 4), "s3": F(1, 4)})
    with pytest.raises(DistributionError):
        convex_combine([(F(1, 2), s1)])


def test_distribution_text():
    d = parse_dist("1/2 t1 + 1/2 t2")
    assert d == Dist({"t1": F(1, 2), "t2": F(1, 2)})
    assert parse_dist("t") == Dist.point("t")
    assert parse_dist(format_dist(d)) == d
    with pytest.raises(DistributionError):
        parse_dist("1/2 t1 + 1/3 t2")


def test_divergence_examples():
    assert detect_divergence(parse_plts("states: s\ns tau -> s\n")) == ["s", "s"]
    assert detect_divergence(parse_plts("states: s t\ns a -> t\nt b -> s\n")) is None
    assert detect_divergence(parse_plts("states: s t\ns tau -> 1/2 s, 1/2 t\n")) == ["s", "s"]


def _any_tau_system(rng, n):
    names = [f"q{i}" for i in range(n)]
    trans = []
    for s in names:
        for _ in range(rng.randint(0, 2)):
            act = rng.choice([TAU, "a"])
            trans.append((s, act, random_dist(rng, names, 2, 3)))
    return PLTS(names, trans)


@given(st.integers(0, 100_000), st.integers(1, 6))
def test_divergence_matches_bounded_search(seed, n):
    p = _any_tau_system(random.Random(seed), n)
    witness = detect_divergence(p)
    assert (witness is not None) == has_tau_cycle(Sys.of(p))
    if witness is not None:
        assert witness[0] == witness[-1]
        for x, y in zip(witness, witness[1:]):
            assert any(y in d for d in p.moves(x, TAU))


def test_refuses():
    p = parse_plts("states: s t u\ns b -> s\nu a -> u\n")
    assert refuses(p, Dist.point("t"), {"a", "b"})
    assert not refuses(p, Dist.point("u"), {"a"})
    assert refuses(p, Dist({"s": F(1, 2), "t": F(1, 2)}), {"a"})
    assert not refuses(p, Dist({"s": F(1, 2), "u": F(1, 2)}), {"a"})
    with pytest.raises(ValueError):
        refuses(p, Dist.point("s"), {TAU})
