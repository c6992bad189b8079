"""Lifted strong transitions, tau-closure and weak transitions.

For a state ``s`` the set ``{Theta : delta(s) ==tau-hat==> Theta}`` is a
polytope.  It is computed as the least set of generators closed under one
lifted tau-hat step (every support state either stays or takes one of its
tau-transitions), pruned to vertices after each round.  Because every set of
reachable distributions is convex and the step is linear, applying the step to
the vertices suffices.

Weak visible successors compose three polytopes: the tau-closure restricted to
distributions whose support can perform ``a`` (a face of the closure, so its
vertices are closure vertices), the ``a``-step, and the tau-closure again.
"""

from __future__ import annotations

import os
from collections.abc import Iterable
from dataclasses import dataclass
from fractions import Fraction

from .dist import Dist, convex_combine
from .plts import PLTS, TAU, refuses
from .polyhedra import CapExceeded
from .polytope import Polytope, minkowski


def iteration_cap(plts: PLTS) -> int:
    override = os.environ.get("PROBCHAR_MAX_ITERATIONS")
    if override:
        return int(override)
    branch = max((len(plts.moves(s, TAU)) for s in plts.states), default=0) + 1
    return 2 ** min(len(plts.states) * branch, 24)


@dataclass(frozen=True)
class WeakTransTable:
    """Per-state weak successor polytopes for one divergence-free pLTS."""

    per_state_tau: dict  # state -> Polytope of tau-hat closure
    per_state_action: dict  # (state, action) -> Polytope of weak a-successors
    after_action: dict  # (state, action) -> Polytope of {Theta : delta(s) -a-> ==tau-hat==> Theta}

    def successors(self, s: str, a: str) -> Polytope:
        if a == TAU:
            return self.per_state_tau[s]
        return self.per_state_action[(s, a)]


def _tau_closure(plts: PLTS, s: str, cap: int) -> Polytope:
    states = plts.states
    gens = Polytope(states, [Dist.point(s)], pruned=True)
    for _ in range(cap):
        candidates = set(gens.generators)
        for g in gens.generators:
            parts = [(w, (Dist.point(v),) + plts.moves(v, TAU)) for v, w in g.items()]
            candidates.update(minkowski(states, parts).generators)
        nxt = Polytope(states, candidates).pruned()
        if nxt.generators == gens.generators:
            return gens
        gens = nxt
    raise CapExceeded(f"tau-closure of {s!r} did not stabilise within {cap} rounds")


def weak_table(plts: PLTS) -> WeakTransTable:
    """Build (once) and return the weak transition table of ``plts``."""
    cached = plts._cache.get("weak_table")
    if cached is not None:
        return cached
    plts.require_divergence_free()
    states = plts.states
    cap = iteration_cap(plts)
    tau = {s: _tau_closure(plts, s, cap) for s in states}
    after: dict = {}
    action: dict = {}
    for a in plts.actions:
        for s in states:
            gens = set()
            for move in plts.moves(s, a):
                parts = [(w, tau[v].generators) for v, w in move.items()]
                gens.update(minkowski(states, parts).generators)
            after[(s, a)] = Polytope(states, gens).pruned()
        able = {s for s in states if plts.moves(s, a)}
        for s in states:
            gens = set()
            for g in tau[s].generators:
                if all(v in able for v in g):
                    parts = [(w, after[(v, a)].generators) for v, w in g.items()]
                    gens.update(minkowski(states, parts).generators)
            action[(s, a)] = Polytope(states, gens).pruned()
    table = WeakTransTable(tau, action, after)
    plts._cache["weak_table"] = table
    return table


def _lift(plts: PLTS, dist: Dist, per_state) -> Polytope:
    parts = []
    for v, w in dist.items():
        gens = per_state(v)
        if not gens:
            return Polytope.empty(plts.states)
        parts.append((w, gens))
    return minkowski(plts.states, parts)


def strong_successors(plts: PLTS, dist: Dist, a: str, hat: bool = False) -> Polytope:
    """Generators of ``{Theta : dist -a-> Theta}`` under the lifted transition relation.

    With ``hat`` and ``a == tau`` each state may also stay put.
    """
    if hat and a == TAU:
        return _lift(plts, dist, lambda v: (Dist.point(v),) + plts.moves(v, TAU))
    return _lift(plts, dist, lambda v: plts.moves(v, a))


def weak_tau_polytope(plts: PLTS, s: str) -> Polytope:
    return weak_table(plts).per_state_tau[s]


def weak_successors(plts: PLTS, dist: Dist, a: str) -> Polytope:
    """Generators of ``{Theta : dist ==a-hat==> Theta}``; for tau the closure itself."""
    table = weak_table(plts)
    return _lift(plts, dist, lambda v: table.successors(v, a).generators)


def successor_generators(plts: PLTS, s: str, a: str, semantics: str) -> tuple[Dist, ...]:
    """Generators of the successors of ``delta(s)`` under the chosen semantics."""
    if semantics == "strong":
        return plts.moves(s, a)
    return weak_table(plts).successors(s, a).generators


def successors(plts: PLTS, dist: Dist, a: str, semantics: str) -> Polytope:
    if semantics == "strong":
        return strong_successors(plts, dist, a)
    return weak_successors(plts, dist, a)


def refusing_states(plts: PLTS, actions: Iterable[str]) -> frozenset[str]:
    blocked = frozenset(actions) | {TAU}
    return frozenset(s for s in plts.states if not (plts.enabled(s) & blocked))


def refusal_reachable(plts: PLTS, dist: Dist, actions: Iterable[str]) -> bool:
    """Can ``dist`` evolve by internal steps alone into a distribution refusing ``actions``?"""
    actions = frozenset(actions)
    if TAU in actions:
        raise ValueError("refusal sets range over external actions")
    table = weak_table(plts)
    ok = refusing_states(plts, actions)
    # the refusing distributions form a face of the simplex, so the question is
    # per support state whether some closure vertex lies inside that face
    return all(
        any(all(u in ok for u in g) for g in table.per_state_tau[v].generators) for v in dist
    )


def refusal_witness(plts: PLTS, dist: Dist, actions: Iterable[str]) -> Dist | None:
    actions = frozenset(actions)
    table = weak_table(plts)
    ok = refusing_states(plts, actions)
    pairs = []
    for v, w in dist.items():
        g = next((g for g in table.per_state_tau[v].generators if all(u in ok for u in g)), None)
        if g is None:
            return None
        pairs.append((w, g))
    out = convex_combine(pairs)
    assert refuses(plts, out, actions)
    return out
