"""Lifting of relations to distributions, with weight-function witnesses."""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from fractions import Fraction

from .dist import Dist
from .flow import max_flow
from .linprog import LinearProgram, lin, lin_add, q


@dataclass(frozen=True)
class StateRelation:
    """A set of state pairs between a left and a right state space."""

    pairs: frozenset
    left_space: tuple = ()
    right_space: tuple = ()

    def __init__(self, pairs: Iterable[tuple[str, str]], left_space=None, right_space=None):
        pairs = frozenset(pairs)
        left = tuple(left_space) if left_space is not None else tuple(sorted({s for s, _ in pairs}))
        right = tuple(right_space) if right_space is not None else tuple(sorted({t for _, t in pairs}))
        ls, rs = set(left), set(right)
        for s, t in pairs:
            if s not in ls or t not in rs:
                raise ValueError(f"pair {(s, t)} outside the declared spaces")
        object.__setattr__(self, "pairs", pairs)
        object.__setattr__(self, "left_space", left)
        object.__setattr__(self, "right_space", right)

    def __contains__(self, pair) -> bool:
        return pair in self.pairs

    def image(self, s: str) -> list[str]:
        return [t for t in self.right_space if (s, t) in self.pairs]

    def inverse(self) -> StateRelation:
        return StateRelation({(t, s) for s, t in self.pairs}, self.right_space, self.left_space)

    def is_equivalence(self) -> bool:
        if self.left_space != self.right_space:
            return False
        P = self.pairs
        S = self.left_space
        if any((s, s) not in P for s in S):
            return False
        if any((t, s) not in P for s, t in P):
            return False
        return all((s, u) in P for s, t in P for t2, u in P if t == t2)

    def classes(self) -> list[frozenset]:
        out, seen = [], set()
        for s in self.left_space:
            if s not in seen:
                c = frozenset(t for t in self.right_space if (s, t) in self.pairs)
                seen |= c
                out.append(c)
        return out


@dataclass(frozen=True)
class WeightFunction:
    entries: Mapping[tuple[str, str], Fraction] = field(default_factory=dict)

    def row_sum(self, s: str) -> Fraction:
        return sum((w for (u, _), w in self.entries.items() if u == s), Fraction(0))

    def col_sum(self, t: str) -> Fraction:
        return sum((w for (_, v), w in self.entries.items() if v == t), Fraction(0))


def is_witness(R: StateRelation, delta: Dist, theta: Dist, w: WeightFunction) -> bool:
    """The three weight-function conditions, checked exactly."""
    if any(p <= 0 or pair not in R for pair, p in w.entries.items()):
        return False
    rows = {s for s, _ in w.entries} | set(delta)
    cols = {t for _, t in w.entries} | set(theta)
    return all(w.row_sum(s) == delta.get(s) for s in rows) and all(w.col_sum(t) == theta.get(t) for t in cols)


def lift_check(R: StateRelation, delta: Dist, theta: Dist) -> WeightFunction | None:
    """Return a weight function witnessing ``delta (lift R) theta``, or None."""
    left = sorted(delta.support)
    right = sorted(theta.support)
    src, snk = ("src",), ("snk",)
    nodes = [src] + [("L", s) for s in left] + [("R", t) for t in right] + [snk]
    edges = [(src, ("L", s), delta[s]) for s in left]
    edges += [(("L", s), ("R", t), None) for s in left for t in right if (s, t) in R.pairs]
    edges += [(("R", t), snk, theta[t]) for t in right]
    value, flow = max_flow(nodes, edges, src, snk)
    if value != 1:
        return None
    entries = {}
    for (u, v), f in flow.items():
        if u[0] == "L" and v[0] == "R" and f > 0:
            entries[(u[1], v[1])] = f
    w = WeightFunction(entries)
    assert is_witness(R, delta, theta, w)
    return w


def lift_check_equivalence(R: StateRelation, delta: Dist, theta: Dist) -> bool:
    """Compare the mass each equivalence class receives under the two distributions."""
    if not R.is_equivalence():
        raise ValueError("relation is not an equivalence")
    for cls in R.classes():
        if sum((delta.get(s) for s in cls), Fraction(0)) != sum((theta.get(s) for s in cls), Fraction(0)):
            return False
    return True


def decompose(delta: Dist, theta: Dist, w: WeightFunction) -> list[tuple[Fraction, str, str]]:
    """Paired decomposition ``[(p_i, s_i, t_i)]`` read off a weight function."""
    for s in set(delta) | {u for u, _ in w.entries}:
        if w.row_sum(s) != delta.get(s):
            raise ValueError(f"row sum for {s!r} does not match")
    for t in set(theta) | {v for _, v in w.entries}:
        if w.col_sum(t) != theta.get(t):
            raise ValueError(f"column sum for {t!r} does not match")
    return [(p, s, t) for (s, t), p in sorted(w.entries.items()) if p > 0]


@dataclass(frozen=True)
class StateDistRelation:
    """Relation between states and distributions; each state maps to a convex set."""

    per_state: Mapping[str, object]  # StateId -> Polytope


def lift_check_sd(R: StateDistRelation, delta: Dist, theta: Dist) -> bool:
    """Is ``theta = sum_s delta(s) * theta_s`` with each ``theta_s`` in ``per_state(s)``?"""
    lp = LinearProgram()
    total: dict[str, dict] = {}
    for s, p in delta.items():
        poly = R.per_state.get(s)
        if poly is None or poly.is_empty:
            return False
        lams = lp.new_vars(len(poly.generators))
        lp.add_eq(lin_add(*(lin(v) for v in lams)), 1)
        for v, g in zip(lams, poly.generators):
            for t, gw in g.items():
                total[t] = lin_add(total.get(t, {}), lin(v, q(p) * q(gw)))
    for t in set(total) | set(theta):
        lp.add_eq(total.get(t, {}), theta.get(t))
    return lp.feasible()
