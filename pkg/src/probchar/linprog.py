"""Exact linear programming over nonnegative variables.

Problems are stated as equality rows ``sum_j a_ij x_j = b_i`` with ``x >= 0``.
The solver is a sparse tableau simplex over ``gmpy2.mpq`` using Bland's rule,
so it always terminates and every answer is exact.  Phase I is run once per
program and reused by each later objective.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from gmpy2 import mpq

ZERO = mpq(0)
ONE = mpq(1)
CONST = -1  # key of the constant term in a linear expression


def q(value) -> mpq:
    """Convert an int, Fraction, string or mpq to mpq."""
    if isinstance(value, Fraction):
        return mpq(value.numerator, value.denominator)
    return mpq(value)


def to_fraction(value) -> Fraction:
    return Fraction(int(value.numerator), int(value.denominator))


# Linear expressions are plain dicts {var: coef}, with CONST for the constant.

def lin(var: int, coef=ONE) -> dict:
    return {var: q(coef)}


def const(value) -> dict:
    v = q(value)
    return {CONST: v} if v else {}


def lin_add(*exprs: dict) -> dict:
    out: dict = {}
    for e in exprs:
        for k, v in e.items():
            s = out.get(k, ZERO) + v
            if s:
                out[k] = s
            else:
                out.pop(k, None)
    return out


def lin_scale(expr: dict, factor) -> dict:
    f = q(factor)
    if not f:
        return {}
    return {k: v * f for k, v in expr.items()}


def lin_sub(a: dict, b: dict) -> dict:
    return lin_add(a, lin_scale(b, -1))


@dataclass
class LPResult:
    status: str  # "optimal", "infeasible" or "unbounded"
    value: mpq | None = None
    x: list | None = None

    @property
    def feasible(self) -> bool:
        return self.status != "infeasible"

    def eval(self, expr: dict) -> mpq:
        total = expr.get(CONST, ZERO)
        for k, v in expr.items():
            if k != CONST:
                total += v * self.x[k]
        return total


class _Tableau:
    __slots__ = ("rows", "rhs", "basis", "_obj")

    def __init__(self, rows, rhs, basis):
        self.rows = rows
        self.rhs = rhs
        self.basis = basis
        self._obj = None

    def copy(self) -> _Tableau:
        return _Tableau([dict(r) for r in self.rows], list(self.rhs), list(self.basis))

    def pivot(self, r: int, j: int, obj: dict | None = None) -> None:
        rows, rhs = self.rows, self.rhs
        prow = rows[r]
        piv = prow[j]
        if piv != ONE:
            inv = ONE / piv
            for k in prow:
                prow[k] *= inv
            rhs[r] *= inv
        prhs = rhs[r]
        for i, row in enumerate(rows):
            if i == r:
                continue
            f = row.get(j)
            if f is None:
                continue
            for k, v in prow.items():
                nv = row.get(k, ZERO) - f * v
                if nv:
                    row[k] = nv
                else:
                    del row[k]
            rhs[i] -= f * prhs
        if obj is not None:
            f = obj.get(j)
            if f is not None:
                for k, v in prow.items():
                    nv = obj.get(k, ZERO) - f * v
                    if nv:
                        obj[k] = nv
                    else:
                        del obj[k]
                obj[CONST] = obj.get(CONST, ZERO) + f * prhs
        self.basis[r] = j

    def optimize(self, cost: dict, limit: int) -> str:
        """Maximise ``cost`` over columns < limit.  Returns 'optimal' or 'unbounded'.

        ``obj`` holds reduced costs; obj[CONST] accumulates the objective value.
        """
        obj = {k: v for k, v in cost.items() if v}
        obj[CONST] = ZERO
        for i, b in enumerate(self.basis):
            cb = obj.get(b)
            if cb:
                for k, v in self.rows[i].items():
                    nv = obj.get(k, ZERO) - cb * v
                    if nv:
                        obj[k] = nv
                    else:
                        obj.pop(k, None)
                obj[CONST] = obj.get(CONST, ZERO) + cb * self.rhs[i]
        self._obj = obj
        while True:
            entering = None
            for k, v in obj.items():
                if k != CONST and k < limit and v > 0 and (entering is None or k < entering):
                    entering = k
            if entering is None:
                return "optimal"
            best = None
            for i, row in enumerate(self.rows):
                a = row.get(entering)
                if a is not None and a > 0:
                    ratio = self.rhs[i] / a
                    if best is None or ratio < best[0] or (ratio == best[0] and self.basis[i] < self.basis[best[1]]):
                        best = (ratio, i)
            if best is None:
                return "unbounded"
            self.pivot(best[1], entering, obj)


class LinearProgram:
    """Builder and solver for ``A x = b, x >= 0``."""

    def __init__(self) -> None:
        self.num_vars = 0
        self.rows: list[tuple[dict, mpq]] = []
        self.contradiction = False
        self._phase1: _Tableau | None | bool = None

    def new_var(self) -> int:
        self.num_vars += 1
        self._phase1 = None
        return self.num_vars - 1

    def new_vars(self, k: int) -> list[int]:
        return [self.new_var() for _ in range(k)]

    def add_eq(self, lhs: dict, rhs: dict | int | Fraction | mpq = 0) -> None:
        """Add the constraint ``lhs == rhs`` between linear expressions."""
        if not isinstance(rhs, dict):
            rhs = const(rhs)
        e = lin_sub(lhs, rhs)
        c = -e.pop(CONST, ZERO)
        if not e:
            if c:
                self.contradiction = True
            return
        self.rows.append((e, c))
        self._phase1 = None

    def fix_zero(self, expr: dict) -> None:
        self.add_eq(expr, 0)

    # solving

    def _initial(self) -> _Tableau | None:
        if self._phase1 is not None:
            return None if self._phase1 is False else self._phase1
        if self.contradiction:
            self._phase1 = False
            return None
        n = self.num_vars
        rows, rhs, basis = [], [], []
        for i, (e, c) in enumerate(self.rows):
            if c < 0:
                row = {k: -v for k, v in e.items()}
                c = -c
            else:
                row = dict(e)
            row[n + i] = ONE
            rows.append(row)
            rhs.append(c)
            basis.append(n + i)
        tab = _Tableau(rows, rhs, basis)
        cost = {n + i: -ONE for i in range(len(rows))}
        tab.optimize(cost, n + len(rows))
        if tab._obj.get(CONST, ZERO) != 0:
            self._phase1 = False
            return None
        # drive artificial variables out of the basis, dropping redundant rows
        i = 0
        while i < len(tab.rows):
            if tab.basis[i] >= n:
                j = min((k for k in tab.rows[i] if k < n), default=None)
                if j is None:
                    del tab.rows[i]
                    del tab.rhs[i]
                    del tab.basis[i]
                    continue
                tab.pivot(i, j)
            i += 1
        for row in tab.rows:
            for k in [k for k in row if k >= n]:
                del row[k]
        tab._obj = None
        self._phase1 = tab
        return tab

    def solve(self, objective: dict | None = None, maximize: bool = True) -> LPResult:
        tab = self._initial()
        if tab is None:
            return LPResult("infeasible")
        tab = tab.copy()
        n = self.num_vars
        cost = {}
        if objective:
            sign = ONE if maximize else -ONE
            cost = {k: sign * v for k, v in objective.items() if k != CONST}
        status = tab.optimize(cost, n)
        x = [ZERO] * n
        for i, b in enumerate(tab.basis):
            x[b] = tab.rhs[i]
        res = LPResult(status, None, x)
        if objective is not None:
            res.value = res.eval(objective)
        return res

    def feasible(self) -> bool:
        return self._initial() is not None

    def maximize(self, objective: dict) -> LPResult:
        return self.solve(objective, True)

    def minimize(self, objective: dict) -> LPResult:
        return self.solve(objective, False)
