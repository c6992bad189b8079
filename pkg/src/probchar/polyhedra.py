"""Exact polyhedral routines on rational vectors.

* ``double_description``: extreme rays and lineality of ``{y : A y >= 0}``.
* ``facets`` / ``vertices``: V-to-H and H-to-V conversion for polytopes.
* ``extreme_points``: prune a point list to the vertices of its hull.
* ``project``: vertices of the image of an LP-feasible region under a linear
  map, found by the convex-hull-by-optimisation scheme: grow an inner hull
  from LP optima until every facet of the inner hull is confirmed by the LP.
"""

from __future__ import annotations

import math
from fractions import Fraction
from itertools import combinations

from .linprog import CONST, ZERO, LinearProgram, lin, lin_add, q, to_fraction

Vec = tuple  # tuple of Fraction


class CapExceeded(RuntimeError):
    """An engineering iteration cap was hit; the message carries a diagnostic."""


# integer helpers

def _lcm(a: int, b: int) -> int:
    return a * b // math.gcd(a, b)


def _integral(vec) -> tuple[int, ...]:
    fr = [Fraction(v) for v in vec]
    den = 1
    for v in fr:
        den = _lcm(den, v.denominator)
    ints = [int(v * den) for v in fr]
    return _primitive(ints)


def _primitive(ints) -> tuple[int, ...]:
    g = 0
    for v in ints:
        g = math.gcd(g, v)
    if g > 1:
        return tuple(v // g for v in ints)
    return tuple(ints)


def _dot(a, b) -> int:
    return sum(x * y for x, y in zip(a, b))


def double_description(rows: list[tuple[int, ...]], dim: int):
    """Generators of the cone ``{y in Q^dim : row . y >= 0 for all rows}``.

    Returns ``(lineality, rays)``: a basis of the lineality space and the
    extreme rays modulo it, all as primitive integer tuples.
    """
    lineality = [tuple(1 if i == j else 0 for j in range(dim)) for i in range(dim)]
    rays: list[tuple[tuple[int, ...], frozenset]] = []
    for idx, a in enumerate(rows):
        pivot = next((l for l in lineality if _dot(a, l) != 0), None)
        if pivot is not None:
            v0 = _dot(a, pivot)
            if v0 < 0:
                pivot = tuple(-x for x in pivot)
                v0 = -v0
            new_lin = []
            for l in lineality:
                if l == pivot or l == tuple(-x for x in pivot):
                    continue
                v = _dot(a, l)
                new_lin.append(l if v == 0 else _primitive([v0 * x - v * y for x, y in zip(l, pivot)]))
            new_rays = []
            for r, z in rays:
                v = _dot(a, r)
                r2 = r if v == 0 else _primitive([v0 * x - v * y for x, y in zip(r, pivot)])
                new_rays.append((r2, z | {idx}))
            new_rays.append((_primitive(pivot), frozenset(range(idx))))
            lineality, rays = new_lin, new_rays
            continue
        vals = [_dot(a, r) for r, _ in rays]
        pos = [i for i, v in enumerate(vals) if v > 0]
        neg = [i for i, v in enumerate(vals) if v < 0]
        if not neg:
            rays = [(r, z | {idx}) if vals[i] == 0 else (r, z) for i, (r, z) in enumerate(rays)]
            continue
        need = dim - len(lineality) - 2
        new_rays = [(r, z | {idx}) if vals[i] == 0 else (r, z) for i, (r, z) in enumerate(rays) if vals[i] >= 0]
        zsets = [z for _, z in rays]
        for i in pos:
            ri, zi = rays[i]
            for j in neg:
                rj, zj = rays[j]
                common = zi & zj
                if len(common) < need:
                    continue
                if any(k != i and k != j and common <= zsets[k] for k in range(len(rays))):
                    continue
                vi, vj = vals[i], vals[j]
                r = _primitive([vi * y - vj * x for x, y in zip(ri, rj)])
                new_rays.append((r, common | {idx}))
        rays = new_rays
    return lineality, [r for r, _ in rays]


def facets(points: list[Vec]):
    """H-representation of ``conv(points)``: ``(ineqs, eqs)`` with entries ``(a, b)``.

    Inequalities read ``a . x <= b`` and equalities ``a . x == b``; only
    inequalities that are tight at some point are returned.
    """
    if not points:
        raise ValueError("facets of an empty point set")
    dim = len(points[0])
    rows = [_integral((Fraction(1),) + tuple(-Fraction(x) for x in p)) for p in points]
    lineality, rays = double_description(rows, dim + 1)
    eqs = [(tuple(Fraction(x) for x in l[1:]), Fraction(l[0])) for l in lineality]
    ineqs = []
    for r in rays:
        a = tuple(Fraction(x) for x in r[1:])
        b = Fraction(r[0])
        if any(sum(x * y for x, y in zip(a, p)) == b for p in points):
            ineqs.append((a, b))
    return ineqs, eqs


def vertices(ineqs, eqs, dim: int) -> list[Vec]:
    """Vertices of the bounded polyhedron ``{x : a.x <= b (ineqs), a.x == b (eqs)}``."""
    rows = []
    for a, b in eqs:
        r = _integral((Fraction(b),) + tuple(-Fraction(x) for x in a))
        rows.append(r)
        rows.append(tuple(-x for x in r))
    rows.append(tuple([1] + [0] * dim))
    for a, b in ineqs:
        rows.append(_integral((Fraction(b),) + tuple(-Fraction(x) for x in a)))
    lineality, rays = double_description(rows, dim + 1)
    if any(l[0] != 0 for l in lineality):
        raise ValueError("unbounded polyhedron")
    out = []
    for r in rays:
        if r[0] > 0:
            out.append(tuple(Fraction(x, r[0]) for x in r[1:]))
        elif any(r[1:]):
            raise ValueError("unbounded polyhedron")
    return sorted(set(out))


def in_hull(point: Vec, points: list[Vec]) -> bool:
    """Exact test of ``point in conv(points)``."""
    if not points:
        return False
    lp = LinearProgram()
    lams = lp.new_vars(len(points))
    lp.add_eq(lin_add(*(lin(v) for v in lams)), 1)
    for k in range(len(point)):
        expr = {}
        for v, p in zip(lams, points):
            if p[k]:
                expr[v] = q(p[k])
        lp.add_eq(expr, q(point[k]))
    return lp.feasible()


def extreme_points(points) -> list[Vec]:
    """Vertices of ``conv(points)`` in sorted order (duplicates removed)."""
    pts = sorted(set(tuple(Fraction(x) for x in p) for p in points))
    if len(pts) <= 2:
        return pts
    keep = list(pts)
    i = 0
    while i < len(keep):
        others = keep[:i] + keep[i + 1:]
        if in_hull(keep[i], others):
            keep.pop(i)
        else:
            i += 1
    return keep


def nullspace(rows: list[Vec], n: int) -> list[Vec]:
    """Basis of ``{c : r . c = 0 for all rows}`` over the rationals."""
    mat = [[Fraction(x) for x in r] for r in rows]
    pivots = []
    r = 0
    for col in range(n):
        piv = next((i for i in range(r, len(mat)) if mat[i][col] != 0), None)
        if piv is None:
            continue
        mat[r], mat[piv] = mat[piv], mat[r]
        pv = mat[r][col]
        mat[r] = [x / pv for x in mat[r]]
        for i in range(len(mat)):
            if i != r and mat[i][col] != 0:
                f = mat[i][col]
                mat[i] = [x - f * y for x, y in zip(mat[i], mat[r])]
        pivots.append(col)
        r += 1
        if r == len(mat):
            break
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for fcol in free:
        v = [Fraction(0)] * n
        v[fcol] = Fraction(1)
        for i, pc in enumerate(pivots):
            v[pc] = -mat[i][fcol]
        basis.append(tuple(v))
    return basis


def _value(expr: dict, x) -> Fraction:
    total = expr.get(CONST, ZERO)
    for k, v in expr.items():
        if k != CONST:
            total += v * x[k]
    return to_fraction(total)


def project(lp: LinearProgram, outputs: list[dict], max_points: int = 10_000) -> list[Vec]:
    """Vertices of ``{outputs(x) : x feasible for lp}`` (assumed bounded)."""
    start = lp.solve()
    if not start.feasible:
        return []

    def image(res) -> Vec:
        return tuple(_value(e, res.x) for e in outputs)

    def objective(c) -> dict:
        obj: dict = {}
        for ck, e in zip(c, outputs):
            if ck:
                for k, v in e.items():
                    if k != CONST:
                        obj[k] = obj.get(k, ZERO) + q(ck) * v
        return obj

    def dot(c, p) -> Fraction:
        return sum((x * y for x, y in zip(c, p)), Fraction(0))

    n = len(outputs)
    p0 = image(start)
    points = [p0]
    eq_dirs: list[Vec] = []
    # affine hull
    while True:
        span = [tuple(a - b for a, b in zip(p, p0)) for p in points[1:]]
        open_dirs = nullspace(span + eq_dirs, n)
        if not open_dirs:
            break
        c = open_dirs[0]
        base = dot(c, p0)
        hi = lp.maximize(objective(c))
        p = image(hi)
        if dot(c, p) > base:
            points.append(p)
            continue
        lo = lp.minimize(objective(c))
        p = image(lo)
        if dot(c, p) < base:
            points.append(p)
            continue
        eq_dirs.append(c)
    if len(points) == 1:
        return points
    confirmed: set[frozenset] = set()
    while True:
        if len(points) > max_points:
            raise CapExceeded(f"projection exceeded {max_points} hull points")
        ineqs, _ = facets(points)
        grew = False
        for a, b in ineqs:
            tight = frozenset(i for i, p in enumerate(points) if dot(a, p) == b)
            if tight in confirmed:
                continue
            res = lp.maximize(objective(a))
            p = image(res)
            if dot(a, p) > b:
                points.append(p)
                grew = True
                break
            confirmed.add(tight)
        if not grew:
            break
    ineqs, eqs = facets(points)
    return vertices(ineqs, eqs, n)
