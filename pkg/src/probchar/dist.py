"""Finite-support probability distributions with exact rational weights."""

from __future__ import annotations

from collections.abc import Iterable, Iterator, Mapping
from fractions import Fraction
from typing import Union

Rational = Union[Fraction, int, str]


class DistributionError(ValueError):
    """Raised when weights do not form a probability distribution."""


def as_fraction(value: Rational) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise DistributionError(f"not a rational weight: {value!r}")
    if isinstance(value, (int, str)):
        return Fraction(value)
    # gmpy2.mpq and other rationals expose numerator/denominator
    try:
        return Fraction(int(value.numerator), int(value.denominator))
    except AttributeError:
        raise DistributionError(f"not a rational weight: {value!r}") from None


class Dist(Mapping[str, Fraction]):
    """An immutable probability distribution over state names.

    Zero weights are dropped and entries are kept sorted by state name, so two
    distributions are equal exactly when they assign the same masses.
    """

    __slots__ = ("_items", "_map", "_hash")

    def __init__(self, weights: Mapping[str, Rational] | Iterable[tuple[str, Rational]]):
        pairs = weights.items() if isinstance(weights, Mapping) else weights
        acc: dict[str, Fraction] = {}
        for state, w in pairs:
            w = as_fraction(w)
            if w < 0:
                raise DistributionError(f"negative weight {w} on {state!r}")
            acc[state] = acc.get(state, Fraction(0)) + w
        items = tuple(sorted((s, w) for s, w in acc.items() if w != 0))
        total = sum((w for _, w in items), Fraction(0))
        if total != 1:
            raise DistributionError(f"weights sum to {total}, not 1")
        self._items = items
        self._map = dict(items)
        self._hash = hash(items)

    @classmethod
    def point(cls, state: str) -> Dist:
        return cls(((state, Fraction(1)),))

    def __getitem__(self, state: str) -> Fraction:
        return self._map[state]

    def get(self, state, default=Fraction(0)):
        return self._map.get(state, default)

    def __iter__(self) -> Iterator[str]:
        return (s for s, _ in self._items)

    def __len__(self) -> int:
        return len(self._items)

    def __contains__(self, state) -> bool:
        return state in self._map

    def __eq__(self, other) -> bool:
        if isinstance(other, Dist):
            return self._items == other._items
        return NotImplemented

    def __hash__(self) -> int:
        return self._hash

    def __lt__(self, other: Dist) -> bool:
        return self._items < other._items

    def items(self):
        return self._items

    @property
    def support(self) -> tuple[str, ...]:
        return tuple(s for s, _ in self._items)

    def is_point(self) -> bool:
        return len(self._items) == 1

    def point_state(self) -> str | None:
        return self._items[0][0] if len(self._items) == 1 else None

    def vector(self, states: Iterable[str]) -> tuple[Fraction, ...]:
        return tuple(self._map.get(s, Fraction(0)) for s in states)

    def __repr__(self) -> str:
        return f"Dist({format_dist(self)!r})"

    def __str__(self) -> str:
        return format_dist(self)


def format_dist(d: Dist) -> str:
    """Render in the CLI syntax, e.g. ``1/2 v + 1/2 w``; points print as bare names."""
    if d.is_point():
        return d.point_state()
    return " + ".join(f"{w} {s}" for s, w in d.items())


def parse_dist(text: str) -> Dist:
    """Parse ``"1/2 t1 + 1/2 t2"``; a bare state name is the point distribution."""
    terms = [t.strip() for t in text.split("+")]
    if not terms or any(not t for t in terms):
        raise DistributionError(f"malformed distribution: {text!r}")
    if len(terms) == 1 and len(terms[0].split()) == 1:
        return Dist.point(terms[0])
    pairs = []
    for term in terms:
        parts = term.split()
        if len(parts) != 2:
            raise DistributionError(f"expected '<weight> <state>' in {term!r}")
        try:
            w = Fraction(parts[0])
        except (ValueError, ZeroDivisionError):
            raise DistributionError(f"bad weight {parts[0]!r}") from None
        pairs.append((parts[1], w))
    return Dist(pairs)


def convex_combine(pairs: Iterable[tuple[Rational, Mapping[str, Rational]]]) -> Dist:
    """Pointwise weighted sum of distributions; the weights must sum to 1."""
    pairs = [(as_fraction(p), d) for p, d in pairs]
    if any(p < 0 for p, _ in pairs):
        raise DistributionError("negative combination weight")
    total = sum((p for p, _ in pairs), Fraction(0))
    if total != 1:
        raise DistributionError(f"combination weights sum to {total}, not 1")
    acc: dict[str, Fraction] = {}
    for p, d in pairs:
        if p == 0:
            continue
        for s, w in d.items():
            acc[s] = acc.get(s, Fraction(0)) + p * as_fraction(w)
    return Dist(acc)


def dist_from_vector(states: Iterable[str], vec: Iterable[Rational]) -> Dist:
    return Dist(zip(states, vec))
