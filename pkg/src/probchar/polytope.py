"""Convex sets of distributions in generator (vertex) representation."""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from fractions import Fraction

from .dist import Dist
from .linprog import LinearProgram, lin, lin_add, q
from .polyhedra import extreme_points, in_hull


class Polytope:
    """Convex hull of finitely many distributions over ``states``.

    ``generators`` is kept sorted and duplicate-free; ``pruned()`` reduces it
    to the vertex set, which is a canonical form (two pruned polytopes are
    equal as sets iff their generator tuples coincide).
    """

    __slots__ = ("states", "generators", "_pruned")

    def __init__(self, states: Sequence[str], generators: Iterable[Dist], pruned: bool = False):
        self.states = tuple(states)
        self.generators: tuple[Dist, ...] = tuple(sorted(set(generators)))
        self._pruned = pruned or len(self.generators) <= 2

    @classmethod
    def empty(cls, states: Sequence[str]) -> Polytope:
        return cls(states, (), pruned=True)

    @classmethod
    def face(cls, states: Sequence[str], support: Iterable[str]) -> Polytope:
        """All distributions whose support lies inside ``support``."""
        sup = set(support)
        return cls(states, (Dist.point(s) for s in states if s in sup), pruned=True)

    @classmethod
    def simplex(cls, states: Sequence[str]) -> Polytope:
        return cls.face(states, states)

    @classmethod
    def from_vectors(cls, states: Sequence[str], vectors: Iterable[Sequence], pruned: bool = False) -> Polytope:
        return cls(states, (Dist(zip(states, v)) for v in vectors), pruned)

    @property
    def is_empty(self) -> bool:
        return not self.generators

    def vectors(self) -> list[tuple[Fraction, ...]]:
        return [g.vector(self.states) for g in self.generators]

    def pruned(self) -> Polytope:
        if self._pruned:
            return self
        return Polytope.from_vectors(self.states, extreme_points(self.vectors()), pruned=True)

    def contains(self, d: Dist) -> bool:
        if self.is_empty:
            return False
        if d in self.generators:
            return True
        if any(s not in self.states for s in d):
            return False
        if d.is_point():
            # a point distribution is extreme in the simplex, so it lies in the
            # hull only if it is one of the generators
            return False
        return in_hull(d.vector(self.states), self.vectors())

    __contains__ = contains

    def support(self) -> frozenset[str]:
        return frozenset(s for g in self.generators for s in g)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Polytope):
            return NotImplemented
        return self.states == other.states and self.pruned().generators == other.pruned().generators

    def __hash__(self) -> int:
        return hash((self.states, self.pruned().generators))

    def __repr__(self) -> str:
        return "Polytope([" + ", ".join(str(g) for g in self.generators) + "])"


def minkowski(states: Sequence[str], parts: Iterable[tuple[Fraction, Sequence[Dist]]]) -> Polytope:
    """Generators of ``sum_i p_i * conv(G_i)`` (the p_i sum to 1).

    Partial sums are pruned after each factor so the product stays small.
    Returns the empty polytope if some factor with positive weight is empty.
    """
    states = tuple(states)
    acc: list[tuple[Fraction, ...]] = [tuple(Fraction(0) for _ in states)]
    for p, gens in parts:
        p = Fraction(p)
        if p == 0:
            continue
        if not gens:
            return Polytope.empty(states)
        vecs = {g.vector(states) for g in gens}
        combined = {tuple(a + p * b for a, b in zip(x, y)) for x in acc for y in vecs}
        acc = extreme_points(combined)
    return Polytope.from_vectors(states, acc, pruned=True)


def polytope_lp_membership(lp: LinearProgram, poly: Polytope, target: list[dict], mass: dict | None = None) -> None:
    """Constrain the expressions ``target`` to lie in ``mass * poly``.

    ``mass`` defaults to the constant 1.  Adds one multiplier per generator.
    """
    lams = lp.new_vars(len(poly.generators))
    lp.add_eq(lin_add(*(lin(v) for v in lams)), mass if mass is not None else 1)
    for k, s in enumerate(poly.states):
        expr = {}
        for v, g in zip(lams, poly.generators):
            w = g.get(s)
            if w:
                expr[v] = q(w)
        lp.add_eq(expr, target[k])
