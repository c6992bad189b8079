"""Brute-force reference procedures used only by the tests.

Nothing here imports the solver modules: distributions are plain dicts of
Fractions, systems are lists of (source, action, dict) triples, and all
feasibility questions are settled by enumerating candidate vertices of small
polyhedra with exact Gaussian elimination.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import chain, combinations, product

TAU = "tau"

# exact linear algebra


def solve_square(rows, rhs):
    """Solve a square system exactly; None if singular."""
    n = len(rows)
    m = [list(map(Fraction, r)) + [Fraction(b)] for r, b in zip(rows, rhs)]
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            return None
        m[col], m[piv] = m[piv], m[col]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col] / m[col][col]
                m[r] = [a - f * b for a, b in zip(m[r], m[col])]
    return [m[i][n] / m[i][i] for i in range(n)]


def rank(rows) -> int:
    m = [list(map(Fraction, r)) for r in rows]
    rk, ncols = 0, len(m[0]) if m else 0
    for col in range(ncols):
        piv = next((r for r in range(rk, len(m)) if m[r][col] != 0), None)
        if piv is None:
            continue
        m[rk], m[piv] = m[piv], m[rk]
        for r in range(len(m)):
            if r != rk and m[r][col] != 0:
                f = m[r][col] / m[rk][col]
                m[r] = [a - f * b for a, b in zip(m[r], m[rk])]
        rk += 1
    return rk


def feasible(n, eqs, ineqs):
    """Is {x in Q^n : a.x = b for eqs, a.x >= b for ineqs, x >= 0} nonempty?

    The set is assumed bounded (the callers always include a simplex
    constraint), so it is nonempty iff it has a vertex.  Vertices are found
    by trying every choice of n linearly independent tight constraints.
    """
    cons = [(list(a), Fraction(b), True) for a, b in eqs]
    cons += [(list(a), Fraction(b), False) for a, b in ineqs]
    cons += [([Fraction(int(i == j)) for j in range(n)], Fraction(0), False) for i in range(n)]
    eq_rows = [c for c in cons if c[2]]
    # reduce the equalities to an independent subset
    basis = []
    for c in eq_rows:
        if rank([r[0] for r in basis + [c]]) > len(basis):
            basis.append(c)
    free = n - len(basis)
    loose = [c for c in cons if not c[2]]
    for extra in combinations(loose, free):
        chosen = basis + list(extra)
        x = solve_square([c[0] for c in chosen], [c[1] for c in chosen])
        if x is None:
            continue
        if all(_dot(a, x) == b if is_eq else _dot(a, x) >= b for a, b, is_eq in cons):
            return x
    return None


def _dot(a, x):
    return sum((Fraction(p) * q for p, q in zip(a, x)), Fraction(0))


# distributions


def dist(d) -> dict:
    return {k: Fraction(v) for k, v in dict(d).items() if Fraction(v) != 0}


def in_hull(point, points, states) -> bool:
    """Is the distribution ``point`` a convex combination of ``points``?"""
    if not points:
        return False
    k = len(points)
    eqs = [([1] * k, 1)]
    for s in states:
        eqs.append(([p.get(s, 0) for p in points], point.get(s, 0)))
    return feasible(k, eqs, []) is not None


def subsets(xs):
    xs = list(xs)
    return chain.from_iterable(combinations(xs, r) for r in range(len(xs) + 1))


def lifts(R, delta, theta) -> bool:
    """Hall-type criterion: every set A of delta's support sends its mass into R(A)."""
    if sum(delta.values()) != sum(theta.values()):
        return False
    for A in subsets(delta):
        if not A:
            continue
        image = {t for (s, t) in R if s in A}
        if sum(delta[s] for s in A) > sum(theta.get(t, 0) for t in image):
            return False
    return True


def lifts_to_some(R, delta, gens, combined=True) -> bool:
    """Is delta (lift R) Theta for some Theta in conv(gens) (or in gens)?"""
    if not gens:
        return False
    if not combined or len(gens) == 1:
        return any(lifts(R, delta, g) for g in gens)
    k = len(gens)
    ineqs = []
    for A in subsets(delta):
        if not A:
            continue
        image = {t for (s, t) in R if s in A}
        ineqs.append(([sum(g.get(t, 0) for t in image) for g in gens], sum(delta[s] for s in A)))
    return feasible(k, [([1] * k, 1)], ineqs) is not None


# systems as plain data


class Sys:
    def __init__(self, states, transitions):
        self.states = list(states)
        self.trans = [(s, a, dist(d)) for s, a, d in transitions]

    def moves(self, s, a):
        return [d for x, b, d in self.trans if x == s and b == a]

    def out(self, s):
        return [(a, d) for x, a, d in self.trans if x == s]

    @classmethod
    def of(cls, plts):
        return cls(plts.states, [(s, a, dict(d)) for s, a, d in plts.transitions])


def is_simulation(sys: Sys, R, combined: bool) -> bool:
    return all(
        lifts_to_some(R, d, sys.moves(t, a), combined) for s, t in R for a, d in sys.out(s)
    )


def is_bisimulation(sys: Sys, R, combined: bool) -> bool:
    inv = {(t, s) for s, t in R}
    return is_simulation(sys, R, combined) and all(
        lifts_to_some(inv, d, sys.moves(s, a), combined) for s, t in R for a, d in sys.out(t)
    )


def greatest_by_enumeration(sys: Sys, bisim: bool, combined: bool) -> frozenset:
    """Largest relation passing the transfer test, by trying every relation.

    The largest (bi)simulation contains every other one, so it is the unique
    one of maximal size: relations are tried from the largest down.
    Individual transfer verdicts depend only on the part of the relation
    between the supports involved, and are memoised on that part.
    """
    pairs = [(s, t) for s in sys.states for t in sys.states]
    bit = {p: 1 << i for i, p in enumerate(pairs)}
    memo = {}

    def mask_of(rows, cols, flip=False):
        m = 0
        for u in rows:
            for v in cols:
                m |= bit[(v, u)] if flip else bit[(u, v)]
        return m

    checks = []  # per pair: list of (local mask, thunk(R as set))
    for s, t in pairs:
        items = []
        for a, d in sys.out(s):
            gens = sys.moves(t, a)
            cols = {v for g in gens for v in g}
            items.append((mask_of(d, cols), ("f", s, t, a, tuple(sorted(d.items())))))
        if bisim:
            for a, d in sys.out(t):
                gens = sys.moves(s, a)
                cols = {v for g in gens for v in g}
                items.append((mask_of(d, cols, flip=True), ("b", s, t, a, tuple(sorted(d.items())))))
        checks.append(items)

    def ok(idx, R):
        s, t = pairs[idx]
        for mask, tag in checks[idx]:
            key = (tag, R & mask)
            hit = memo.get(key)
            if hit is None:
                rel = {p for p in pairs if R & mask & bit[p]}
                side, x, y, a, d = tag
                d = dict(d)
                if side == "f":
                    hit = lifts_to_some(rel, d, sys.moves(y, a), combined)
                else:
                    inv = {(v, u) for u, v in rel}
                    hit = lifts_to_some(inv, d, sys.moves(x, a), combined)
                memo[key] = hit
            if not hit:
                return False
        return True

    n = len(pairs)
    for size in range(n, -1, -1):
        for chosen in combinations(range(n), size):
            R = 0
            for i in chosen:
                R |= 1 << i
            if all(ok(i, R) for i in chosen):
                return frozenset(pairs[i] for i in chosen)
    return frozenset()


# weak transitions by bounded enumeration


def lifted_step(sys: Sys, d, choices):
    """All distributions reachable from ``d`` by letting each support state
    pick one of ``choices(state)`` (pure choices only)."""
    support = sorted(d)
    opts = [choices(s) for s in support]
    if any(not o for o in opts):
        return []
    out = []
    for pick in product(*opts):
        acc: dict = {}
        for s, g in zip(support, pick):
            for v, p in g.items():
                acc[v] = acc.get(v, 0) + d[s] * p
        out.append(dist(acc))
    return out


def tau_hat_reach(sys: Sys, d, depth: int):
    frontier = [dist(d)]
    seen = {tuple(sorted(frontier[0].items()))}
    reached = list(frontier)
    for _ in range(depth):
        new = []
        for x in frontier:
            for y in lifted_step(sys, x, lambda s: [{s: 1}] + sys.moves(s, TAU)):
                key = tuple(sorted(y.items()))
                if key not in seen:
                    seen.add(key)
                    new.append(y)
        reached += new
        frontier = new
    return reached


def weak_reach(sys: Sys, d, a: str, depth: int):
    """Pure-choice weak a-successors of ``d`` with at most ``depth`` internal rounds on each side."""
    if a == TAU:
        return tau_hat_reach(sys, d, depth)
    out = []
    for x in tau_hat_reach(sys, d, depth):
        for y in lifted_step(sys, x, lambda s: sys.moves(s, a)):
            out += tau_hat_reach(sys, y, depth)
    uniq = {tuple(sorted(z.items())): z for z in out}
    return list(uniq.values())


def has_tau_cycle(sys: Sys) -> bool:
    """Depth-bounded search for a closed path in the internal-support graph."""
    succ = {s: {v for d in sys.moves(s, TAU) for v in d} for s in sys.states}
    n = len(sys.states)
    for s in sys.states:
        layer = set(succ[s])
        for _ in range(n + 1):
            if s in layer:
                return True
            layer = {v for u in layer for v in succ[u]}
    return False
