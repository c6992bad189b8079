"""Characteristic equation systems and their closed formulae."""

from __future__ import annotations

from dataclasses import dataclass

from .dist import Dist
from .kinds import RelationKind
from .logic.formula import Box, Conj, Diamond, Disj, Down, Formula, Nu, OPlus, OPlusW, Ref, Var, conj, substitute
from .logic.syntax import EquationSystem
from .plts import PLTS, TAU
from .weak import successor_generators


def state_var(s: str) -> str:
    return f"X_{s}"


@dataclass(frozen=True)
class CharSystem:
    kind: RelationKind
    system: EquationSystem
    semantics: str

    def var(self, s: str) -> str:
        return state_var(s)


def dist_formula(d: Dist, guarded: bool = True) -> Formula:
    """``X_d``: the weighted choice of ``d(u)`` times (``down``) ``X_u``."""
    items = []
    for u, p in d.items():
        x = Var(state_var(u))
        items.append((p, Down(x) if guarded else x))
    return OPlusW(items)


def _body(plts: PLTS, s: str, kind: RelationKind, strong_failure: bool) -> Formula:
    guarded = kind not in (RelationKind.ForwardSim, RelationKind.FailureSim)
    parts: list[Formula] = []
    for a, d in plts.out(s):
        parts.append(Diamond(a, dist_formula(d, guarded)))
    if kind.is_bisim:
        for a in plts.actions_tau:
            if kind.semantics == "strong":
                gens = plts.moves(s, a)
            else:
                gens = successor_generators(plts, s, a, "weak")
            parts.append(Box(a, OPlus(dist_formula(g, guarded) for g in gens)))
    if kind is RelationKind.FailureSim and not plts.moves(s, TAU):
        refused = sorted(set(plts.actions) - plts.enabled(s))
        if strong_failure:
            parts.extend(Box(a, Disj(())) for a in refused)
        else:
            parts.append(Ref(refused))
    return conj(parts) if parts else Conj(())


def char_equations(plts: PLTS, kind: RelationKind, strong_failure: bool = False) -> CharSystem:
    """One equation ``X_s = phi_s`` per state, following the template of ``kind``.

    ``strong_failure`` writes the refusal conjunct of the failure template
    as boxes into ``false``; such systems are for display and fall outside
    the failure fragment.
    """
    if not kind.has_charform:
        raise ValueError(f"no characteristic system is defined for {kind.value}")
    if strong_failure and kind is not RelationKind.FailureSim:
        raise ValueError("strong_failure applies to failure-sim only")
    if kind.semantics == "weak":
        plts.require_divergence_free()
    eqs = tuple((state_var(s), _body(plts, s, kind, strong_failure)) for s in plts.states)
    return CharSystem(kind, EquationSystem(eqs), kind.semantics)


def transform_to_formula(system: CharSystem | EquationSystem, x: str) -> Formula:
    """Closed formula for component ``x`` of the greatest solution.

    The target equation is moved to the front; then, from the last equation
    down to the second, each is closed with ``nu``, substituted into the
    equations before it and dropped.  The remaining equation is closed last.
    """
    if isinstance(system, CharSystem):
        system = system.system
    eqs = system.as_dict()
    if x not in eqs:
        raise KeyError(x)
    order = [x] + [y for y in system.variables if y != x]
    bodies = [eqs[y] for y in order]
    for k in range(len(order) - 1, 0, -1):
        closed = Nu(order[k], bodies[k])
        for i in range(k):
            bodies[i] = substitute(bodies[i], order[k], closed)
        bodies.pop()
    return Nu(order[0], bodies[0])


def char_formula(plts: PLTS, s: str, kind: RelationKind) -> Formula:
    if s not in plts.index:
        raise KeyError(s)
    return transform_to_formula(char_equations(plts, kind), state_var(s))
