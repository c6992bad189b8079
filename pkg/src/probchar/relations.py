"""Greatest-fixpoint computation of the behavioural relations.

State-state kinds are computed by refinement from S x S.  A pair (s, t) is
removed once some move ``s -a-> Delta`` has no answer ``Theta`` among the
(strong or weak) successors of t with ``Delta (lift R) Theta``.  For the
combined kinds the answer ranges over the convex hull of the successor
generators, and the match is one exact feasibility problem over hull
coefficients and weight-function entries.

Forward and failure simulation relate states to distributions.  For each
state the set of related distributions is convex, so it is kept as a
polytope and shrunk until the transfer clause holds for all its points.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field

from .bracket import Bracket
from .dist import Dist, convex_combine
from .kinds import RelationKind
from .lifting import StateDistRelation, StateRelation, WeightFunction, lift_check
from .linprog import LinearProgram, lin, lin_add, q, to_fraction
from .logic.formula import TRUE, Diamond, Down, Formula, Neg, OPlusW, conj
from .plts import PLTS, TAU
from .polyhedra import project
from .polytope import Polytope
from .weak import iteration_cap, refusal_reachable, successor_generators, successors, weak_table

Pair = tuple[str, str]


class _Pairs:
    """Read-only view of a live pair set, usable where lifting expects a relation."""

    __slots__ = ("pairs",)

    def __init__(self, pairs):
        self.pairs = pairs

    def __contains__(self, pair) -> bool:
        return pair in self.pairs


@dataclass(frozen=True)
class RelationResult:
    kind: RelationKind
    pairs: StateRelation
    trace: tuple[frozenset, ...]
    died_at: Mapping[Pair, int] = field(default_factory=dict)

    def __contains__(self, pair) -> bool:
        return pair in self.pairs.pairs

    def related(self, s: str, t: str) -> bool:
        return (s, t) in self.pairs.pairs


# matching


def _check_kind(plts: PLTS, kind: RelationKind) -> None:
    if kind.needs_divergence_free:
        plts.require_divergence_free()


def answer_generators(plts: PLTS, kind: RelationKind, t: str, a: str) -> tuple[Dist, ...]:
    """Generators of the answers ``t`` may give to an ``a``-move under ``kind``."""
    return successor_generators(plts, t, a, kind.semantics)


def match(
    rel: Iterable | _Pairs,
    delta: Dist,
    gens: tuple[Dist, ...],
    combined: bool = True,
) -> tuple[Dist, WeightFunction] | None:
    """Find ``Theta`` in ``conv(gens)`` (or in ``gens`` if not combined) with ``delta (lift rel) Theta``.

    ``rel`` holds pairs ``(u, v)`` with u on delta's side.  Returns the answer
    and a weight function, or None.
    """
    if not gens:
        return None
    view = rel if isinstance(rel, _Pairs) else _Pairs(frozenset(rel))
    for g in gens:
        w = lift_check(view, delta, g)
        if w is not None:
            return g, w
    if not combined or len(gens) == 1:
        return None
    lp = LinearProgram()
    lams = lp.new_vars(len(gens))
    lp.add_eq(lin_add(*(lin(v) for v in lams)), 1)
    cols: dict[str, dict] = {}
    for v, g in zip(lams, gens):
        for x, p in g.items():
            cols[x] = lin_add(cols.get(x, {}), lin(v, q(p)))
    wvars: dict[Pair, int] = {}
    for u in delta:
        row = {}
        for x in cols:
            if (u, x) in view:
                wv = lp.new_var()
                wvars[(u, x)] = wv
                row[wv] = q(1)
        lp.add_eq(row, delta[u])
    for x, expr in cols.items():
        colsum = {wv: q(1) for (u, y), wv in wvars.items() if y == x}
        lp.add_eq(colsum, expr)
    res = lp.solve()
    if not res.feasible:
        return None
    theta = convex_combine((to_fraction(res.x[v]), g) for v, g in zip(lams, gens) if res.x[v])
    entries = {pair: to_fraction(res.x[wv]) for pair, wv in wvars.items() if res.x[wv]}
    return theta, WeightFunction(entries)


def _transfer(plts: PLTS, kind: RelationKind, rel: _Pairs, inv: _Pairs, s: str, t: str):
    """First unmatched move of the pair, as ``(side, action, dist)``, or None."""
    for a, delta in plts.out(s):
        if match(rel, delta, answer_generators(plts, kind, t, a), kind.combined) is None:
            return ("left", a, delta)
    if kind.is_bisim:
        for a, theta in plts.out(t):
            if match(inv, theta, answer_generators(plts, kind, s, a), kind.combined) is None:
                return ("right", a, theta)
    return None


def transfer_holds(plts: PLTS, kind: RelationKind, pairs: Iterable[Pair], s: str, t: str) -> bool:
    """Does the pair satisfy the kind's transfer condition with respect to ``pairs``?"""
    _check_kind(plts, kind)
    pairs = frozenset(pairs)
    inv = frozenset((y, x) for x, y in pairs)
    return _transfer(plts, kind, _Pairs(pairs), _Pairs(inv), s, t) is None


def is_fixpoint(plts: PLTS, kind: RelationKind, pairs: Iterable[Pair]) -> bool:
    """Is ``pairs`` itself a simulation (bisimulation) of the given kind?"""
    pairs = frozenset(pairs)
    return all(transfer_holds(plts, kind, pairs, s, t) for s, t in pairs)


# state-state refinement


def compute_relation(plts: PLTS, kind: RelationKind) -> RelationResult:
    """Greatest relation of the given kind (for forward/failure: restricted to point distributions)."""
    key = ("relation", kind)
    hit = plts._cache.get(key)
    if hit is not None:
        return hit
    _check_kind(plts, kind)
    if kind.state_to_dist:
        sd = compute_sd_relation(plts, kind)
        S = plts.states
        for s in S:
            for t in S:
                sd.contains(s, Dist.point(t))
        snaps = [
            frozenset((s, t) for s in S for t in S if snap[s].contains(Dist.point(t))) for snap in sd.trace
        ]
        died = {}
        for k in range(1, len(snaps)):
            for pair in snaps[k - 1] - snaps[k]:
                died[pair] = k
        result = RelationResult(kind, StateRelation(snaps[-1], S, S), tuple(snaps), died)
        plts._cache[key] = result
        return result
    S = plts.states
    R = {(s, t) for s in S for t in S}
    inv = {(t, s) for s, t in R}
    trace = [frozenset(R)]
    died: dict[Pair, int] = {}
    view, iview = _Pairs(R), _Pairs(inv)
    rnd = 0
    while True:
        rnd += 1
        removed = False
        for s, t in sorted(R):
            if (s, t) not in R:
                continue
            if _transfer(plts, kind, view, iview, s, t) is not None:
                doomed = [(s, t), (t, s)] if kind.is_bisim else [(s, t)]
                for x, y in doomed:
                    if (x, y) in R:
                        R.discard((x, y))
                        inv.discard((y, x))
                        died[(x, y)] = rnd
                removed = True
        trace.append(frozenset(R))
        if not removed:
            break
    result = RelationResult(kind, StateRelation(R, S, S), tuple(trace), died)
    plts._cache[key] = result
    return result


def refinement_pass(plts: PLTS, kind: RelationKind, pairs: Iterable[Pair]) -> frozenset:
    """Pairs surviving one synchronous refinement step against ``pairs``."""
    pairs = frozenset(pairs)
    return frozenset(p for p in pairs if transfer_holds(plts, kind, pairs, *p))


def transfer_exists(
    plts: PLTS, kind: RelationKind, pairs: Iterable[Pair], delta_next: Dist, theta: Dist, a: str
) -> tuple[Dist, WeightFunction] | None:
    """A move ``theta -a-> Theta'`` (strong or weak per kind) with ``delta_next (lift pairs) Theta'``."""
    _check_kind(plts, kind)
    poly = successors(plts, theta, a, kind.semantics)
    return match(frozenset(pairs), delta_next, poly.generators, True)


def lifted_moves(plts: PLTS, dist: Dist, a: str) -> Polytope:
    """Generators of the lifted strong moves ``dist -a-> Delta'``."""
    return successors(plts, dist, a, "strong")


# forward and failure simulation


def _refused(plts: PLTS, kind: RelationKind, s: str) -> frozenset | None:
    """Actions ``s`` refuses, when the failure clause applies to it."""
    if kind is RelationKind.FailureSim and not plts.moves(s, TAU):
        return frozenset(a for a in plts.actions if not plts.moves(s, a))
    return None


def _initial_support(plts: PLTS, kind: RelationKind, s: str) -> list[str]:
    """States that may carry mass in a distribution related to ``s``.

    Each visible move of ``s`` must be answerable from every support state,
    and for failure simulation every support state must be able to reach a
    refusal of what ``s`` refuses; both conditions are per support state.
    """
    table = weak_table(plts)
    refused = _refused(plts, kind, s)
    needed = {a for a, _ in plts.out(s) if a != TAU}
    allowed = []
    for v in plts.states:
        if any(not table.successors(v, a).generators for a in needed):
            continue
        if refused is not None and not refusal_reachable(plts, Dist.point(v), refused):
            continue
        allowed.append(v)
    return allowed


@dataclass
class _ClauseLP:
    lp: LinearProgram
    coords: dict  # state -> expression for the candidate's coordinate
    pieces: list  # (target state u, mass, [(var, generator, preferred)])
    penalty: dict  # total weight placed on non-preferred generators


def _clause_lp(
    plts: PLTS,
    s: str,
    R: Mapping[str, Polytope],
    theta_poly: Polytope | None,
    theta: Dist | None,
    extra: Mapping[str, Polytope] | None = None,
) -> _ClauseLP | None:
    """LP whose feasible points carry a candidate satisfying the transfer clause of ``s``.

    Either ``theta`` is fixed, or it ranges over ``theta_poly``.  Each move
    ``s -a-> Delta`` must be answered by a weak ``a``-move of the candidate
    landing on ``sum_u Delta(u) * Theta_u`` with ``Theta_u`` in ``R[u]`` (or in
    the hull of ``R[u]`` and ``extra[u]``, charging ``penalty`` for the
    extra generators).  Returns None when some target set is empty.
    """
    table = weak_table(plts)
    states = plts.states
    lp = LinearProgram()
    if theta is not None:
        coords = {v: ({-1: q(theta[v])} if v in theta else {}) for v in states}
        support = list(theta)
    else:
        lams = lp.new_vars(len(theta_poly.generators))
        lp.add_eq(lin_add(*(lin(v) for v in lams)), 1)
        coords = {v: {} for v in states}
        for lv, g in zip(lams, theta_poly.generators):
            for v, p in g.items():
                coords[v] = lin_add(coords[v], lin(lv, q(p)))
        support = sorted(theta_poly.support(), key=plts.index.get)
    pieces = []
    penalty: dict = {}
    for a, delta in plts.out(s):
        after: dict[str, dict] = {}
        for v in support:
            gens = table.successors(v, a).generators
            if not gens:
                lp.add_eq(coords[v], 0)
                continue
            mus = lp.new_vars(len(gens))
            lp.add_eq(lin_add(*(lin(m) for m in mus)), coords[v])
            for m, g in zip(mus, gens):
                for x, p in g.items():
                    after[x] = lin_add(after.get(x, {}), lin(m, q(p)))
        target: dict[str, dict] = {}
        for u, p in delta.items():
            gens = [(h, True) for h in R[u].generators]
            if extra is not None:
                gens += [(h, False) for h in extra[u].generators if h not in R[u].generators]
            if not gens:
                return None
            nus = lp.new_vars(len(gens))
            lp.add_eq(lin_add(*(lin(n) for n in nus)), p)
            for n, (h, pref) in zip(nus, gens):
                if not pref:
                    penalty[n] = q(1)
                for x, hp in h.items():
                    target[x] = lin_add(target.get(x, {}), lin(n, q(hp)))
            pieces.append((u, p, [(n, h, pref) for n, (h, pref) in zip(nus, gens)]))
        for x in set(after) | set(target):
            lp.add_eq(after.get(x, {}), target.get(x, {}))
    return _ClauseLP(lp, coords, pieces, penalty)


def _refine_state(plts: PLTS, s: str, R: Mapping[str, Polytope]) -> Polytope:
    poly = R[s]
    if poly.is_empty or not plts.out(s):
        return poly
    ok = True
    for g in poly.generators:
        cl = _clause_lp(plts, s, R, None, g)
        if cl is None or not cl.lp.feasible():
            ok = False
            break
    if ok:
        return poly
    cl = _clause_lp(plts, s, R, poly, None)
    if cl is None:
        return Polytope.empty(plts.states)
    verts = project(cl.lp, [cl.coords[v] for v in plts.states])
    return Polytope.from_vectors(plts.states, verts, pruned=True)


def _clause(plts: PLTS, kind: RelationKind, R: Mapping[str, Polytope], s: str, theta: Dist) -> bool:
    refused = _refused(plts, kind, s)
    if refused is not None and not refusal_reachable(plts, theta, refused):
        return False
    if not plts.out(s):
        return True
    cl = _clause_lp(plts, s, R, None, theta)
    return cl is not None and cl.lp.feasible()


def _witness(plts: PLTS, kind: RelationKind, s: str, theta: Dist, goals: Mapping, over: Mapping):
    """Distributions an answer for ``(s, theta)`` relies on, preferring known goals."""
    refused = _refused(plts, kind, s)
    if refused is not None and not refusal_reachable(plts, theta, refused):
        return None
    cl = _clause_lp(plts, s, goals, None, theta, over)
    if cl is None:
        return None
    res = cl.lp.minimize(cl.penalty) if cl.penalty else cl.lp.solve()
    if not res.feasible:
        return None
    out = []
    for u, p, parts in cl.pieces:
        used = [(to_fraction(res.x[n]), h) for n, h, _ in parts if res.x[n]]
        if used:
            out.append((u, convex_combine((w / p, h) for w, h in used)))
    return out


class SDResult:
    """Forward or failure similarity: for each state, the related distributions.

    Membership queries are decided exactly; when the refinement from the top
    does not stabilise, a finite post-fixpoint containing the query is
    searched for (see :mod:`probchar.bracket`).
    """

    def __init__(self, plts: PLTS, kind: RelationKind, max_rounds: int):
        self.plts = plts
        self.kind = kind
        start = {s: Polytope.face(plts.states, _initial_support(plts, kind, s)) for s in plts.states}
        self.bracket = Bracket(
            plts.states,
            plts.states,
            lambda s, R: _refine_state(plts, s, R),
            lambda s, theta, R: _clause(plts, kind, R, s, theta),
            lambda s, theta, goals, over: _witness(plts, kind, s, theta, goals, over),
            start,
            max_rounds,
        )
        self.bracket.run(2 * len(plts.states) + 2)

    @property
    def exact(self) -> bool:
        """Did refinement from the top reach the greatest fixpoint?"""
        return self.bracket.exact

    @property
    def trace(self) -> list[dict]:
        """Candidate sets per refinement round (state -> Polytope)."""
        return self.bracket.trace

    @property
    def relation(self) -> StateDistRelation:
        """The largest relation when ``exact``; otherwise the current over-approximation."""
        return StateDistRelation(dict(self.bracket.over))

    def contains(self, s: str, theta: Dist) -> bool:
        if any(v not in self.plts.index for v in theta):
            raise ValueError("distribution mentions states outside the pLTS")
        return self.bracket.decide(s, theta)

    def died_at(self, s: str, theta: Dist) -> int | None:
        """First round whose candidate set for ``s`` no longer contains ``theta``."""
        if self.contains(s, theta):
            return None
        for k, snap in enumerate(self.trace):
            if not snap[s].contains(theta):
                return k
        raise AssertionError("refuted distribution missing from every round")


def compute_sd_relation(plts: PLTS, kind: RelationKind, max_rounds: int | None = None) -> SDResult:
    """Largest forward (failure) simulation, as a membership oracle per state."""
    if not kind.state_to_dist:
        raise ValueError(f"{kind.value} relates states to distributions only for forward-sim and failure-sim")
    key = ("sd-relation", kind)
    hit = plts._cache.get(key)
    if hit is not None and max_rounds is None:
        return hit
    plts.require_divergence_free()
    cap = max_rounds if max_rounds is not None else max(iteration_cap(plts), 64)
    result = SDResult(plts, kind, cap)
    if max_rounds is None:
        plts._cache[key] = result
    return result


def check_sd_relation(plts: PLTS, kind: RelationKind, s: str, theta: Dist) -> bool:
    """Is ``s`` related to the distribution ``theta`` by forward (failure) similarity?"""
    return compute_sd_relation(plts, kind).contains(s, theta)


def sd_clause_holds(plts: PLTS, kind: RelationKind, per_state: Mapping[str, Polytope], s: str, theta: Dist) -> bool:
    """Both clauses for ``s`` and ``theta`` relative to a candidate relation."""
    return _clause(plts, kind, per_state, s, theta)


# distinguishing formulae


def _levels(plts: PLTS) -> list[frozenset]:
    key = "bisim-levels"
    hit = plts._cache.get(key)
    if hit is not None:
        return hit
    kind = RelationKind.StrongProbBisim
    S = plts.states
    levels = [frozenset((s, t) for s in S for t in S)]
    while True:
        nxt = refinement_pass(plts, kind, levels[-1])
        if nxt == levels[-1]:
            break
        levels.append(nxt)
    plts._cache[key] = levels
    return levels


def distinguish(plts: PLTS, s: str, t: str, kind: RelationKind = RelationKind.StrongProbBisim) -> Formula:
    """A fixpoint-free formula satisfied by ``delta(s)`` and not by ``delta(t)``.

    Follows the completeness argument for strong probabilistic bisimilarity:
    if a move ``s -a-> Delta`` cannot be answered at level k, then
    ``<a> (+)_{s'} Delta(s') . down /\\_{t'} phi(s', t')`` separates the two,
    where t' ranges over the states not k-related to s'.  If only a move of
    ``t`` fails, the negation of the mirrored formula is returned.
    """
    if kind is not RelationKind.StrongProbBisim:
        raise ValueError("distinguishing formulae are produced for strong-bisim only")
    levels = _levels(plts)
    if (s, t) in levels[-1]:
        raise ValueError(f"{s} and {t} are strongly probabilistically bisimilar")
    memo: dict[Pair, Formula] = {}

    def level_of(x: str, y: str) -> int:
        return next(k for k in range(len(levels)) if (x, y) not in levels[k]) - 1

    def separate(x: str, a: str, delta: Dist, k: int) -> Formula:
        rel = levels[k]
        parts = []
        trivial = True
        for u, p in delta.items():
            psi = conj(list(dict.fromkeys(dist(u, y) for y in plts.states if (u, y) not in rel)))
            if psi != TRUE:
                trivial = False
            parts.append((p, Down(psi)))
        if trivial:
            return Diamond(a, TRUE)
        return Diamond(a, OPlusW(parts))

    def dist(x: str, y: str) -> Formula:
        hit = memo.get((x, y))
        if hit is not None:
            return hit
        k = level_of(x, y)
        rel = _Pairs(levels[k])
        out = None
        for a, delta in plts.out(x):
            if match(rel, delta, plts.moves(y, a)) is None:
                out = separate(x, a, delta, k)
                break
        if out is None:
            for a, theta in plts.out(y):
                if match(rel, theta, plts.moves(x, a)) is None:
                    out = Neg(separate(y, a, theta, k))
                    break
        assert out is not None, f"no failing move for ({x}, {y})"
        memo[(x, y)] = out
        return out

    return dist(s, t)
