"""Satisfaction checking for pMu under the strong and weak semantics.

Formulae denote sets of distributions.  Membership is decided for the
fragment where every probabilistic choice and every modality leads to a
*linear* condition: the set of ``(y, m)`` with ``y`` in ``m`` times the
denotation is described by linear equalities over fresh nonnegative
variables.  ``down``, ``ref`` and variables bound to polytopes are faces or
polytopes, and diamonds, choices and conjunctions compose such descriptions.
Boxes are checked on the vertices of the successor polytope, which is
complete when the body is convex.

Fixpoints are flattened: every (fixpoint node, binding of its free
variables) becomes one variable of an equation system, solved per strongly
connected component.  A component whose variables only matter at point
distributions (all occurrences under ``down``) is solved over sets of
states; otherwise its values are polytopes obtained by projection.
"""

from __future__ import annotations

from collections.abc import Callable, Iterable, Mapping
from dataclasses import dataclass, field

from ..bracket import Bracket
from ..dist import Dist
from ..kinds import RelationKind
from ..linprog import CONST, LinearProgram, lin, lin_add, lin_scale, q, to_fraction
from ..plts import PLTS
from ..polyhedra import CapExceeded, project
from ..polytope import Polytope
from ..weak import iteration_cap, refusal_reachable, successor_generators, successors
from .formula import (
    Box,
    Conj,
    Diamond,
    Disj,
    Down,
    Formula,
    Mu,
    Neg,
    Nu,
    OPlus,
    OPlusW,
    Ref,
    Var,
    _Fix,
    walk,
)
from .syntax import EquationSystem, print_formula

SEMANTICS = ("strong", "weak")


class FragmentError(ValueError):
    """The formula lies outside the fragment this checker decides."""

    def __init__(self, message: str, subterm: Formula | None = None):
        self.subterm = subterm
        if subterm is not None:
            text = print_formula(subterm)
            if len(text) > 200:
                text = text[:197] + "..."
            message = f"{message}: {text}"
        super().__init__(message)


class _NotLinear(Exception):
    def __init__(self, node: Formula):
        self.node = node


# set representations for environments


class PointSet:
    """A finite set of distributions."""

    def __init__(self, dists: Iterable[Dist]):
        self.dists = frozenset(dists)

    @classmethod
    def of_states(cls, states: Iterable[str]) -> PointSet:
        return cls(Dist.point(s) for s in states)

    def point(self, v: str) -> bool:
        return Dist.point(v) in self.dists

    def contains(self, d: Dist) -> bool:
        return d in self.dists

    def members(self) -> list[Dist]:
        return sorted(self.dists)

    def __repr__(self) -> str:
        return "PointSet({" + ", ".join(str(d) for d in self.members()) + "})"


class ExplicitPolytope:
    """A convex set given by generators."""

    def __init__(self, polytope: Polytope):
        self.polytope = polytope

    def point(self, v: str) -> bool:
        return self.polytope.contains(Dist.point(v))

    def contains(self, d: Dist) -> bool:
        return self.polytope.contains(d)

    def members(self) -> list[Dist]:
        return list(self.polytope.generators)

    def __repr__(self) -> str:
        return f"ExplicitPolytope({self.polytope!r})"


class _Mixed(ExplicitPolytope):
    """Hull of preferred and extra generators; records the extra distributions it is asked about."""

    def __init__(self, name: str, pref: Polytope, extra: Polytope, sink: list):
        super().__init__(Polytope(pref.states, pref.generators + extra.generators))
        self.name = name
        self.pref = pref
        self.extra = frozenset(extra.generators) - frozenset(pref.generators)
        self.sink = sink

    def point(self, v: str) -> bool:
        return self.contains(Dist.point(v))

    def contains(self, d: Dist) -> bool:
        if self.pref.contains(d):
            return True
        if self.polytope.contains(d):
            self.sink.append((self.name, d))
            return True
        return False


class Table:
    """Point-distribution membership answered by a callback (a coinductive goal table)."""

    def __init__(self, oracle: Callable[[str], bool]):
        self.oracle = oracle

    def point(self, v: str) -> bool:
        return self.oracle(v)

    def contains(self, d: Dist) -> bool:
        v = d.point_state()
        return v is not None and self.oracle(v)

    def members(self) -> list[Dist]:
        raise TypeError("a goal table has no explicit member list")


SetRepr = PointSet | ExplicitPolytope | Table


def as_set_repr(value, plts: PLTS) -> SetRepr:
    if isinstance(value, (PointSet, ExplicitPolytope, Table)):
        return value
    if isinstance(value, Polytope):
        return ExplicitPolytope(value)
    return PointSet(value)


# fragments


_ALL = frozenset({Conj, Disj, Neg, Diamond, Box, OPlus, OPlusW, Down, Var, Mu, Nu})


@dataclass(frozen=True)
class FragmentSpec:
    """Constructors admitted by the logic matching a relation kind."""

    kind: RelationKind
    allowed: frozenset
    semantics: str

    @classmethod
    def for_kind(cls, kind: RelationKind) -> FragmentSpec:
        allowed = set(_ALL)
        if not kind.is_bisim:
            allowed -= {Neg, Box}
        if kind in (RelationKind.ForwardSim, RelationKind.FailureSim):
            allowed -= {Down}
        if kind is RelationKind.FailureSim:
            allowed |= {Ref}
        return cls(kind, frozenset(allowed), kind.semantics)

    def violation(self, phi: Formula) -> Formula | None:
        for node in walk(phi):
            if type(node) not in self.allowed:
                return node
        return None

    def admits(self, phi: Formula) -> bool:
        return self.violation(phi) is None


# evaluation


@dataclass
class _Ctx:
    env: Mapping[str, SetRepr]
    memo: dict = field(default_factory=dict)
    # witness mode: goals found so far, and per linear program the weight on
    # extra generators and the variable occurrences (name, y, m)
    witness: list | None = None
    penalty: dict | None = None
    occ: list | None = None


def _one() -> dict:
    return {CONST: q(1)}


class Checker:
    """Membership in the denotation of fixpoint-free formulae for one pLTS."""

    def __init__(self, plts: PLTS, semantics: str = "strong"):
        if semantics not in SEMANTICS:
            raise ValueError(f"semantics must be 'strong' or 'weak', not {semantics!r}")
        if semantics == "weak":
            plts.require_divergence_free()
        self.plts = plts
        self.semantics = semantics
        self._gens: dict = {}
        self._refusal: dict = {}

    @classmethod
    def for_plts(cls, plts: PLTS, semantics: str) -> Checker:
        """Shared checker per pLTS and semantics (it only caches transition data)."""
        key = ("pmu-checker", semantics)
        hit = plts._cache.get(key)
        if hit is None:
            hit = cls(plts, semantics)
            plts._cache[key] = hit
        return hit

    # transition structure

    def gens(self, v: str, a: str) -> tuple[Dist, ...]:
        key = (v, a)
        hit = self._gens.get(key)
        if hit is None:
            hit = successor_generators(self.plts, v, a, self.semantics)
            self._gens[key] = hit
        return hit

    def succ(self, d: Dist, a: str) -> tuple[Dist, ...]:
        v = d.point_state()
        if v is not None:
            return self.gens(v, a)
        return successors(self.plts, d, a, self.semantics).generators

    def can_refuse(self, v: str, actions: frozenset) -> bool:
        key = (v, actions)
        hit = self._refusal.get(key)
        if hit is None:
            hit = refusal_reachable(self.plts, Dist.point(v), actions)
            self._refusal[key] = hit
        return hit

    # membership

    def holds(self, phi: Formula, d: Dist, env: Mapping[str, SetRepr]) -> bool:
        return self._holds(phi, d, _Ctx(env))

    def witness(self, phi: Formula, d: Dist, env: Mapping[str, SetRepr], sink: list) -> bool:
        """Like ``holds``; every LP prefers non-extra generators and the
        variable values it uses are appended to ``sink``."""
        return self._holds(phi, d, _Ctx(env, witness=sink))

    def _lookup(self, name: str, ctx: _Ctx) -> SetRepr:
        try:
            return ctx.env[name]
        except KeyError:
            raise FragmentError(f"unbound variable {name!r}") from None

    def _point(self, phi: Formula, v: str, ctx: _Ctx) -> bool:
        key = (id(phi), v)
        hit = ctx.memo.get(key)
        if hit is None:
            hit = self._holds(phi, Dist.point(v), ctx)
            ctx.memo[key] = hit
        return hit

    def _holds(self, phi: Formula, d: Dist, ctx: _Ctx) -> bool:
        if isinstance(phi, Conj):
            return all(self._holds(c, d, ctx) for c in phi.items)
        if isinstance(phi, Disj):
            return any(self._holds(c, d, ctx) for c in phi.items)
        if isinstance(phi, Neg):
            return not self._holds(phi.body, d, ctx)
        if isinstance(phi, Down):
            return all(self._point(phi.body, v, ctx) for v in d)
        if isinstance(phi, Var):
            return self._lookup(phi.name, ctx).contains(d)
        if isinstance(phi, Ref):
            return all(self.can_refuse(v, phi.actions) for v in d)
        if isinstance(phi, Box):
            if not self._convex(phi.body, ctx):
                raise FragmentError("box over a body that is not certified convex", phi.body)
            return all(self._holds(phi.body, g, ctx) for g in self.succ(d, phi.action))
        if isinstance(phi, Diamond) and isinstance(phi.body, Disj):
            return any(self._holds(Diamond(phi.action, c), d, ctx) for c in phi.body.items)
        if isinstance(phi, (Diamond, OPlus, OPlusW)):
            try:
                return self._linear_holds(phi, d, ctx)
            except _NotLinear as exc:
                raise FragmentError("unsupported subformula under a diamond or probabilistic choice", exc.node) from None
        if isinstance(phi, _Fix):
            raise FragmentError("fixpoint reached the fixpoint-free checker", phi)
        raise TypeError(f"not a formula: {phi!r}")

    def _linear_holds(self, phi: Formula, d: Dist, ctx: _Ctx) -> bool:
        lp = LinearProgram()
        y = {v: {CONST: q(p)} for v, p in d.items()}
        if ctx.witness is None:
            self.constrain(lp, phi, y, _one(), ctx)
            return lp.feasible()
        saved = ctx.penalty, ctx.occ
        ctx.penalty, ctx.occ = {}, []
        try:
            self.constrain(lp, phi, y, _one(), ctx)
            penalty, occ = ctx.penalty, ctx.occ
        finally:
            ctx.penalty, ctx.occ = saved
        res = lp.minimize(penalty) if penalty else lp.solve()
        if not res.feasible:
            return False
        for name, ys, m in occ:
            mass = res.eval(m)
            if mass > 0:
                vals = {v: to_fraction(res.eval(e) / mass) for v, e in ys.items()}
                ctx.witness.append((name, Dist({v: p for v, p in vals.items() if p})))
        return True

    def _convex(self, phi: Formula, ctx: _Ctx) -> bool:
        if isinstance(phi, (Down, Ref)):
            return True
        if isinstance(phi, Neg):
            return isinstance(phi.body, Down)
        if isinstance(phi, (Conj, OPlus)):
            return all(self._convex(c, ctx) for c in phi.items)
        if isinstance(phi, OPlusW):
            return all(self._convex(c, ctx) for _, c in phi.items)
        if isinstance(phi, Disj):
            return len(phi.items) <= 1 and all(self._convex(c, ctx) for c in phi.items)
        if isinstance(phi, (Diamond, Box)):
            return self._convex(phi.body, ctx)
        if isinstance(phi, Var):
            return isinstance(self._lookup(phi.name, ctx), ExplicitPolytope)
        return False

    def nonempty(self, phi: Formula, ctx: _Ctx) -> bool:
        key = ("nonempty", id(phi))
        hit = ctx.memo.get(key)
        if hit is not None:
            return hit
        if isinstance(phi, Down):
            hit = any(self._point(phi.body, v, ctx) for v in self.plts.states)
        elif isinstance(phi, Var) and not isinstance(self._lookup(phi.name, ctx), ExplicitPolytope):
            value = self._lookup(phi.name, ctx)
            if isinstance(value, PointSet):
                hit = bool(value.dists)
            else:
                hit = any(value.point(v) for v in self.plts.states)
        else:
            lp = LinearProgram()
            y = {}
            for v in self.plts.states:
                y[v] = lin(lp.new_var())
            lp.add_eq(lin_add(*y.values()), 1)
            saved = ctx.penalty, ctx.occ
            ctx.penalty, ctx.occ = {}, []
            try:
                self.constrain(lp, phi, y, _one(), ctx)
            except _NotLinear as exc:
                raise FragmentError("cannot decide emptiness of a probabilistic choice argument", exc.node) from None
            finally:
                ctx.penalty, ctx.occ = saved
            hit = lp.feasible()
        ctx.memo[key] = hit
        return hit

    def constrain(self, lp: LinearProgram, phi: Formula, y: dict, m: dict, ctx: _Ctx) -> None:
        """Add constraints stating ``y in m * [[phi]]``.

        ``y`` maps each state that may carry mass to a linear expression over
        nonnegative variables (absent states carry none) and its entries sum
        to ``m``.
        """
        if isinstance(phi, Conj):
            for c in phi.items:
                self.constrain(lp, c, y, m, ctx)
        elif isinstance(phi, Disj):
            if not phi.items:
                lp.add_eq(m, 0)
            elif len(phi.items) == 1:
                self.constrain(lp, phi.items[0], y, m, ctx)
            else:
                raise _NotLinear(phi)
        elif isinstance(phi, Down):
            for v in y:
                if not self._point(phi.body, v, ctx):
                    lp.add_eq(y[v], 0)
        elif isinstance(phi, Ref):
            for v in y:
                if not self.can_refuse(v, phi.actions):
                    lp.add_eq(y[v], 0)
        elif isinstance(phi, Var):
            value = self._lookup(phi.name, ctx)
            if not isinstance(value, ExplicitPolytope):
                raise _NotLinear(phi)
            poly = value.polytope
            lams = lp.new_vars(len(poly.generators))
            lp.add_eq(lin_add(*(lin(x) for x in lams)), m)
            if isinstance(value, _Mixed) and ctx.occ is not None:
                for x, g in zip(lams, poly.generators):
                    if g in value.extra:
                        ctx.penalty[x] = q(1)
                ctx.occ.append((value.name, dict(y), m))
            comb: dict[str, dict] = {}
            for x, g in zip(lams, poly.generators):
                for v, p in g.items():
                    comb[v] = lin_add(comb.get(v, {}), lin(x, q(p)))
            for v in set(comb) | set(y):
                lp.add_eq(y.get(v, {}), comb.get(v, {}))
        elif isinstance(phi, Diamond):
            nxt: dict[str, dict] = {}
            for v, expr in y.items():
                gens = self.gens(v, phi.action)
                if not gens:
                    lp.add_eq(expr, 0)
                    continue
                mus = lp.new_vars(len(gens))
                lp.add_eq(lin_add(*(lin(x) for x in mus)), expr)
                for x, g in zip(mus, gens):
                    for u, p in g.items():
                        nxt[u] = lin_add(nxt.get(u, {}), lin(x, q(p)))
            self.constrain(lp, phi.body, nxt, m, ctx)
        elif isinstance(phi, OPlusW):
            self._split(lp, [(lin_scale(m, p), c) for p, c in phi.items], y, ctx)
        elif isinstance(phi, OPlus):
            if not phi.items or not all(self.nonempty(c, ctx) for c in phi.items):
                lp.add_eq(m, 0)
                return
            masses = lp.new_vars(len(phi.items))
            lp.add_eq(lin_add(*(lin(x) for x in masses)), m)
            self._split(lp, [(lin(x), c) for x, c in zip(masses, phi.items)], y, ctx)
        else:
            raise _NotLinear(phi)

    def _split(self, lp: LinearProgram, parts: list[tuple[dict, Formula]], y: dict, ctx: _Ctx) -> None:
        shares: dict[str, list] = {v: [] for v in y}
        for mass, c in parts:
            states = list(y)
            if isinstance(c, Down):
                states = [v for v in states if self._point(c.body, v, ctx)]
            part = {}
            for v in states:
                x = lp.new_var()
                part[v] = lin(x)
                shares[v].append(part[v])
            lp.add_eq(lin_add(*part.values()), mass)
            self.constrain(lp, c, part, mass, ctx)
        for v, expr in y.items():
            lp.add_eq(lin_add(*shares[v]), expr)

    def denotation(self, phi: Formula, env: Mapping[str, SetRepr]) -> Polytope:
        """The denotation of a linear formula as a polytope (vertices by projection)."""
        ctx = _Ctx(env)
        lp = LinearProgram()
        y = {v: lin(lp.new_var()) for v in self.plts.states}
        lp.add_eq(lin_add(*y.values()), 1)
        try:
            self.constrain(lp, phi, y, _one(), ctx)
        except _NotLinear as exc:
            raise FragmentError("equation body is not a linear condition", exc.node) from None
        verts = project(lp, [y[v] for v in self.plts.states])
        return Polytope.from_vectors(self.plts.states, verts, pruned=True)


# flattening of fixpoints


@dataclass
class _Flat:
    root: Formula
    equations: dict  # name -> (Nu|Mu, body)


def _flatten(phi: Formula) -> _Flat:
    equations: dict = {}
    memo: dict = {}
    names: dict = {}

    def resolve(node: Formula, ctx: dict) -> Formula:
        fv = node.free_vars
        key = (id(node), tuple(sorted((x, ctx[x]) for x in fv if x in ctx)))
        hit = memo.get(key)
        if hit is not None:
            return hit
        if isinstance(node, Var):
            out = Var(ctx[node.name]) if node.name in ctx else node
        elif isinstance(node, _Fix):
            nkey = (node, key[1])
            name = names.get(nkey)
            if name is None:
                name = f"{node.var}#{len(names)}"
                names[nkey] = name
                inner = {x: ctx[x] for x in fv if x in ctx}
                inner[node.var] = name
                equations[name] = (type(node), None)
                equations[name] = (type(node), resolve(node.body, inner))
            out = Var(name)
        elif not node.children():
            out = node
        else:
            kids = node.children()
            new = [resolve(c, ctx) for c in kids]
            if all(a is b for a, b in zip(kids, new)):
                out = node
            elif isinstance(node, (Conj, Disj, OPlus)):
                out = type(node)(new)
            elif isinstance(node, OPlusW):
                out = OPlusW((p, c) for (p, _), c in zip(node.items, new))
            elif isinstance(node, (Diamond, Box)):
                out = type(node)(node.action, new[0])
            else:
                out = type(node)(new[0])
        memo[key] = out
        return out

    root = resolve(phi, {})
    return _Flat(root, equations)


def _sccs(nodes: list[str], deps: Mapping[str, Iterable[str]]) -> list[list[str]]:
    """Strongly connected components, dependencies before dependents."""
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    out: list[list[str]] = []
    counter = 0
    for start in nodes:
        if start in index:
            continue
        work = [(start, iter(sorted(deps[start])))]
        index[start] = low[start] = counter
        counter += 1
        stack.append(start)
        on_stack.add(start)
        while work:
            node, it = work[-1]
            advanced = False
            for nxt in it:
                if nxt not in index:
                    index[nxt] = low[nxt] = counter
                    counter += 1
                    stack.append(nxt)
                    on_stack.add(nxt)
                    work.append((nxt, iter(sorted(deps[nxt]))))
                    advanced = True
                    break
                if nxt in on_stack:
                    low[node] = min(low[node], index[nxt])
            if advanced:
                continue
            work.pop()
            if work:
                low[work[-1][0]] = min(low[work[-1][0]], low[node])
            if low[node] == index[node]:
                comp = []
                while True:
                    x = stack.pop()
                    on_stack.discard(x)
                    comp.append(x)
                    if x == node:
                        break
                out.append(sorted(comp))
    return out


def _exposed(phi: Formula, at_point: bool = False) -> set[str]:
    """Variables with an occurrence that may be evaluated at a non-point distribution.

    Occurrences under ``down`` are evaluated at points, as long as no diamond,
    box or unweighted choice intervenes; conjunction, disjunction, negation
    and weighted choice (positive weights) keep a point a point.
    """
    out: set[str] = set()
    seen: set = set()
    stack = [(phi, at_point)]
    while stack:
        node, at_point = stack.pop()
        if (id(node), at_point) in seen:
            continue
        seen.add((id(node), at_point))
        if isinstance(node, Var):
            if not at_point:
                out.add(node.name)
            continue
        if isinstance(node, Down):
            stack.append((node.body, True))
        elif isinstance(node, (Conj, Disj, Neg, OPlusW)):
            stack.extend((c, at_point) for c in node.children())
        else:
            stack.extend((c, False) for c in node.children())
    return out


def _top_vars(phi: Formula) -> set[str]:
    """Variables reached from the root through point-preserving operators only."""
    out: set[str] = set()
    seen: set = set()
    stack = [phi]
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        if isinstance(node, Var):
            out.add(node.name)
        elif isinstance(node, (Conj, Disj, Neg, OPlusW)):
            stack.extend(node.children())
    return out


def _point_vars(root: Formula, equations: Mapping[str, Formula]) -> set[str]:
    """Variables whose value is only ever queried at point distributions.

    A variable fails if it is exposed in the root, or exposed in any body,
    or occurs at the top of the body of a variable that itself fails.
    """
    bad = set(_exposed(root))
    for body in equations.values():
        bad |= _exposed(body, at_point=True)
    tops = {x: _top_vars(body) for x, body in equations.items()}
    # top-of-body occurrences are evaluated wherever the owner is
    changed = True
    while changed:
        changed = False
        for x, ys in tops.items():
            if x in bad:
                new = ys - bad
                if new:
                    bad |= new
                    changed = True
    return set(equations) - bad


class _Unsettled(Exception):
    pass


class Solution:
    """Values of a flattened system, ready to answer membership queries.

    Components are solved in dependency order.  A greatest fixpoint over
    polytopes that does not settle during the warm-up rounds, and every
    component after it, are handed to a :class:`~probchar.bracket.Bracket`,
    which decides individual queries exactly.
    """

    def __init__(
        self,
        checker: Checker,
        equations: Mapping[str, tuple[type, Formula]],
        root: Formula,
        env: Mapping[str, SetRepr],
        max_rounds: int | None = None,
    ):
        self.checker = checker
        plts = checker.plts
        self.max_rounds = max_rounds if max_rounds is not None else max(iteration_cap(plts), 64)
        self.warmup = min(self.max_rounds, 2 * len(plts.states) + 2)
        self.env: dict[str, SetRepr] = dict(env)
        self.bodies = {x: b for x, (_, b) in equations.items()}
        self.kinds = {x: k for x, (k, _) in equations.items()}
        deps = {x: sorted(b.free_vars & set(self.bodies)) for x, b in self.bodies.items()}
        self.points = _point_vars(root, self.bodies)
        self.bracket: Bracket | None = None
        comps = _sccs(sorted(self.bodies), deps)
        for i, comp in enumerate(comps):
            ks = {self.kinds[x] for x in comp}
            if len(ks) > 1:
                raise FragmentError("alternating least and greatest fixpoints", self.bodies[comp[0]])
            greatest = ks == {Nu}
            if all(x in self.points for x in comp):
                self._solve_points(comp, greatest)
                continue
            try:
                self._solve_polytopes(comp, greatest)
            except _Unsettled:
                self._open_bracket(comp, [x for c in comps[i + 1 :] for x in c])
                break

    # exact strategies

    def _solve_points(self, comp, greatest: bool) -> None:
        states = self.checker.plts.states
        bodies, env = self.bodies, self.env
        cur = {x: set(states) if greatest else set() for x in comp}
        for x in comp:
            env[x] = PointSet.of_states(cur[x])
        while True:
            changed = False
            for x in comp:
                if greatest:
                    new = {v for v in cur[x] if self.checker.holds(bodies[x], Dist.point(v), env)}
                else:
                    new = cur[x] | {v for v in states if self.checker.holds(bodies[x], Dist.point(v), env)}
                if new != cur[x]:
                    cur[x] = new
                    env[x] = PointSet.of_states(new)
                    changed = True
            if not changed:
                return

    def _solve_polytopes(self, comp, greatest: bool) -> None:
        states = self.checker.plts.states
        start = Polytope.simplex(states) if greatest else Polytope.empty(states)
        for x in comp:
            self.env[x] = ExplicitPolytope(start)
        limit = self.warmup if greatest else self.max_rounds
        for _ in range(limit):
            changed = False
            for x in comp:
                new = self.checker.denotation(self.bodies[x], self.env)
                if new != self.env[x].polytope:
                    self.env[x] = ExplicitPolytope(new)
                    changed = True
            if not changed:
                return
        if greatest:
            raise _Unsettled()
        raise CapExceeded(f"least fixpoint over polytopes did not stabilise within {limit} rounds")

    # bracketing

    def _open_bracket(self, comp: list[str], later: list[str]) -> None:
        names = list(comp) + later
        for x in later:
            if self.kinds[x] is not Nu:
                raise CapExceeded(
                    "a least fixpoint depends on a greatest fixpoint whose iteration does not stabilise"
                )
        for x in names:
            for node in walk(self.bodies[x]):
                if isinstance(node, Neg) and node.body.free_vars & set(names):
                    raise FragmentError("negation over a variable of a non-stabilising fixpoint", node)
        states = self.checker.plts.states
        over = {}
        for x in names:
            if x in comp:
                over[x] = self.env.pop(x).polytope
            else:
                over[x] = Polytope.simplex(states)
        self.open = set(names)
        self.bracket = Bracket(
            names, states, self._refine, self._clause, self._witness_for, over, self.max_rounds
        )

    def _env_with(self, values: Mapping[str, Polytope]) -> dict[str, SetRepr]:
        env = dict(self.env)
        for x, poly in values.items():
            env[x] = ExplicitPolytope(poly)
        return env

    def _refine(self, x: str, values: Mapping[str, Polytope]) -> Polytope:
        env = self._env_with(values)
        states = self.checker.plts.states
        if x in self.points:
            keep = [v for v in states if values[x].contains(Dist.point(v))]
            return Polytope.face(states, [v for v in keep if self.checker.holds(self.bodies[x], Dist.point(v), env)])
        return self.checker.denotation(self.bodies[x], env)

    def _clause(self, x: str, d: Dist, values: Mapping[str, Polytope]) -> bool:
        return self.checker.holds(self.bodies[x], d, self._env_with(values))

    def _witness(self, phi: Formula, d: Dist, goals: Mapping, over: Mapping):
        sink: list = []
        env = dict(self.env)
        for y in self.open:
            env[y] = _Mixed(y, goals[y], over[y], sink)
        if not self.checker.witness(phi, d, env, sink):
            return None
        return sink

    def _witness_for(self, x: str, d: Dist, goals: Mapping, over: Mapping):
        return self._witness(self.bodies[x], d, goals, over)

    # queries

    def holds(self, phi: Formula, d: Dist) -> bool:
        if self.bracket is None:
            return self.checker.holds(phi, d, self.env)
        if not phi.free_vars & self.open:
            return self.checker.holds(phi, d, self.env)
        return self.bracket.decide_with(
            lambda values: self.checker.holds(phi, d, self._env_with(values)),
            lambda goals, over: self._witness(phi, d, goals, over),
            f"membership of {d}",
        )

    def values(self) -> dict[str, SetRepr]:
        """All variable values; only available when every component settled."""
        if self.bracket is not None:
            raise CapExceeded("the greatest fixpoint is not reached by finitely many refinement rounds")
        return dict(self.env)


def _bind(plts: PLTS, env) -> dict[str, SetRepr]:
    return {k: as_set_repr(v, plts) for k, v in (env or {}).items()}


def _prepare(plts: PLTS, phi: Formula, semantics: str, env, max_rounds) -> tuple[Solution, Formula]:
    key = ("pmu-solution", phi, semantics)
    cacheable = env is None and max_rounds is None
    if cacheable:
        hit = plts._cache.get(key)
        if hit is not None:
            return hit
    checker = Checker.for_plts(plts, semantics)
    bound = _bind(plts, env)
    missing = phi.free_vars - set(bound)
    if missing:
        raise FragmentError(f"formula has unbound variables {sorted(missing)}")
    flat = _flatten(phi)
    root = flat.root
    # one unfolding of a top-level fixpoint lets its variable stay point-valued
    if isinstance(root, Var) and root.name in flat.equations:
        root = flat.equations[root.name][1]
    out = Solution(checker, flat.equations, root, bound, max_rounds), root
    if cacheable:
        plts._cache[key] = out
    return out


def satisfies(
    plts: PLTS,
    dist: Dist,
    phi: Formula,
    semantics: str = "strong",
    env: Mapping | None = None,
    max_rounds: int | None = None,
) -> bool:
    """Does ``dist`` belong to the denotation of ``phi``?"""
    if any(v not in plts.index for v in dist):
        raise ValueError("distribution mentions states outside the pLTS")
    solution, root = _prepare(plts, phi, semantics, env, max_rounds)
    return solution.holds(root, dist)


def denotation_of(plts: PLTS, phi: Formula, semantics: str = "strong", env: Mapping | None = None) -> Polytope:
    """Denotation of a closed linear formula as a polytope of distributions."""
    checker = Checker(plts, semantics)
    flat = _flatten(phi)
    values = Solution(checker, flat.equations, flat.root, _bind(plts, env)).values()
    return checker.denotation(flat.root, values)


# equation systems


def _check_system(system: EquationSystem) -> None:
    for x, body in system.equations:
        for node in walk(body):
            if isinstance(node, Neg) and node.body.free_vars:
                raise FragmentError(f"negation over a variable in the body of {x}", node)


class LocalSolver:
    """Coinductive goal-directed evaluation of ``(X, state)`` goals.

    Goals are assumed to hold when first met.  A goal whose body fails under
    the current assumptions is refuted and every goal that read it is
    re-examined.  When the worklist drains, the surviving goals form a
    post-fixpoint and the refuted goals lie outside the greatest solution,
    so every explored goal carries its exact value.
    """

    def __init__(self, checker: Checker, bodies: Mapping[str, Formula], max_goals: int | None = None):
        self.checker = checker
        self.bodies = bodies
        self.table: dict[tuple[str, str], bool] = {}
        self.readers: dict[tuple[str, str], set] = {}
        self.work: list = []
        self.max_goals = max_goals or 64 * len(bodies) * len(checker.plts.states) + 64
        self.evaluations = 0

    def _read(self, goal, reader) -> bool:
        if goal not in self.table:
            if len(self.table) >= self.max_goals:
                raise CapExceeded(f"goal table exceeded {self.max_goals} entries")
            self.table[goal] = True
            self.work.append(goal)
        if reader is not None:
            self.readers.setdefault(goal, set()).add(reader)
        return self.table[goal]

    def _env(self, reader) -> dict[str, Table]:
        return {x: Table(lambda v, x=x: self._read((x, v), reader)) for x in self.bodies}

    def _drain(self) -> None:
        while self.work:
            goal = self.work.pop()
            if not self.table[goal]:
                continue
            x, v = goal
            self.evaluations += 1
            if not self.checker.holds(self.bodies[x], Dist.point(v), self._env(goal)):
                self.table[goal] = False
                for r in self.readers.pop(goal, ()):
                    if self.table.get(r):
                        self.work.append(r)

    def goal(self, x: str, v: str) -> bool:
        self._read((x, v), None)
        self._drain()
        return self.table[(x, v)]

    def query(self, x: str, dist: Dist) -> bool:
        env = {y: Table(lambda v, y=y: self.goal(y, v)) for y in self.bodies}
        return self.checker.holds(self.bodies[x], dist, env)


def _system_solution(plts: PLTS, system: EquationSystem, semantics: str, max_rounds) -> Solution:
    key = ("pmu-system", system, semantics)
    if max_rounds is None:
        hit = plts._cache.get(key)
        if hit is not None:
            return hit
    _check_system(system)
    checker = Checker.for_plts(plts, semantics)
    equations = {y: (Nu, b) for y, b in system.equations}
    # any body may be evaluated at the query distribution
    out = Solution(checker, equations, Disj(b for _, b in system.equations), {}, max_rounds)
    if max_rounds is None:
        plts._cache[key] = out
    return out


def nu_membership(
    plts: PLTS,
    system: EquationSystem,
    x: str,
    dist: Dist,
    semantics: str = "strong",
    max_rounds: int | None = None,
) -> bool:
    """Is ``dist`` in the component ``x`` of the greatest solution of ``system``?

    Systems whose variables all occur under ``down`` are evaluated locally
    from the query; otherwise the system is solved over polytopes.
    """
    if x not in system.variables:
        raise KeyError(x)
    if any(v not in plts.index for v in dist):
        raise ValueError("distribution mentions states outside the pLTS")
    bodies = system.as_dict()
    if _point_vars(bodies[x], bodies) == set(bodies):
        # goal values are exact once the worklist drains, so the table is kept
        key = ("pmu-local", system, semantics)
        solver = plts._cache.get(key)
        if solver is None:
            _check_system(system)
            solver = LocalSolver(Checker.for_plts(plts, semantics), bodies)
            plts._cache[key] = solver
        return solver.query(x, dist)
    return _system_solution(plts, system, semantics, max_rounds).holds(bodies[x], dist)


def greatest_solution(plts: PLTS, system: EquationSystem, semantics: str = "strong") -> dict[str, SetRepr]:
    """All components of the greatest solution (point sets or polytopes)."""
    return _system_solution(plts, system, semantics, None).values()


@dataclass
class PostfixpointReport:
    checked: list = field(default_factory=list)  # (X, Dist)
    violations: list = field(default_factory=list)  # (X, Dist)

    @property
    def ok(self) -> bool:
        return not self.violations


def check_postfixpoint(
    plts: PLTS,
    system: EquationSystem,
    env: Mapping,
    queries: Iterable[tuple[str, Dist]] | None = None,
    semantics: str = "strong",
) -> PostfixpointReport:
    """Check ``d in rho(X) => d in [[E(X)]]rho`` for each query.

    Without explicit queries every listed member (or generator) of each
    ``rho(X)`` is checked, which covers a polytope when the bodies are convex.
    """
    checker = Checker(plts, semantics)
    rho = _bind(plts, env)
    for y in system.variables:
        rho.setdefault(y, PointSet(()))
    bodies = system.as_dict()
    if queries is None:
        queries = [(y, d) for y in system.variables for d in rho[y].members()]
    report = PostfixpointReport()
    for y, d in queries:
        if not rho[y].contains(d):
            continue
        report.checked.append((y, d))
        if not checker.holds(bodies[y], d, rho):
            report.violations.append((y, d))
    return report
