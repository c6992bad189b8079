"""Cross-validation of the relation solvers against characteristic formulae.

For each kind with a characteristic system, ``s`` is related to ``t`` (or to
a distribution) exactly when the query satisfies ``X_s`` in the greatest
solution.  Two formula routes are run independently: the equation system
through ``nu_membership`` and the closed formula through ``satisfies``.
"""

from __future__ import annotations

import random
from collections.abc import Iterable
from dataclasses import dataclass, field

from .charform import char_equations, state_var, transform_to_formula
from .dist import Dist
from .generate import random_dist
from .kinds import RelationKind
from .logic.semantics import nu_membership, satisfies
from .plts import PLTS
from .relations import check_sd_relation, compute_relation


@dataclass(frozen=True)
class Check:
    kind: str
    state: str
    query: str
    relation: bool
    system: bool  # nu_membership on the equation system
    formula: bool  # satisfies on the closed formula

    @property
    def agree(self) -> bool:
        return self.relation == self.system == self.formula


@dataclass
class XvalReport:
    checks: list[Check] = field(default_factory=list)
    skipped: list[tuple[str, str]] = field(default_factory=list)  # (kind, reason)

    @property
    def disagreements(self) -> list[Check]:
        return [c for c in self.checks if not c.agree]

    @property
    def ok(self) -> bool:
        return not self.disagreements


def applicable_kinds(plts: PLTS, kinds: Iterable[RelationKind]) -> tuple[list[RelationKind], list[tuple[str, str]]]:
    run, skipped = [], []
    for k in kinds:
        if not k.has_charform:
            skipped.append((k.value, "no characteristic system for non-combined matching"))
        elif k.needs_divergence_free and not plts.is_divergence_free():
            skipped.append((k.value, "divergent pLTS"))
        else:
            run.append(k)
    return run, skipped


def cross_validate(
    plts: PLTS,
    kinds: Iterable[RelationKind] = tuple(RelationKind),
    samples: int = 0,
    seed: int = 0,
) -> XvalReport:
    """Compare both routes on every state pair and, for forward/failure kinds,
    on ``samples`` seeded random distributions per state."""
    run, skipped = applicable_kinds(plts, kinds)
    report = XvalReport(skipped=skipped)
    rng = random.Random(seed)
    extra = [random_dist(rng, plts.states, len(plts.states), 6) for _ in range(samples)]
    for kind in run:
        cs = char_equations(plts, kind)
        sem = kind.semantics
        rel = None if kind.state_to_dist else compute_relation(plts, kind)
        for s in plts.states:
            x = state_var(s)
            phi = transform_to_formula(cs, x)
            queries = [Dist.point(t) for t in plts.states]
            if kind.state_to_dist:
                queries += extra
            for q in queries:
                if rel is not None:
                    verdict = rel.related(s, q.point_state())
                else:
                    verdict = check_sd_relation(plts, kind, s, q)
                report.checks.append(
                    Check(
                        kind.value,
                        s,
                        str(q),
                        verdict,
                        nu_membership(plts, cs.system, x, q, sem),
                        satisfies(plts, q, phi, sem),
                    )
                )
    return report
