"""Deciding membership in greatest fixpoints over convex sets of distributions.

Greatest fixpoints of the monotone operators used here (forward and failure
simulation, and pMu equation systems whose variables occur under
probabilistic choice) need not be reached by iterating from the top, and can
even have irrational vertices.  Membership of a given rational distribution
is still decided exactly by keeping two bounds:

* ``over``: the iterates from the top.  Each contains the greatest fixpoint,
  so a distribution outside one is refuted.
* ``under``: a post-fixpoint spanned by finitely many goal distributions,
  found by goal-directed search.  Anything inside it belongs to the greatest
  fixpoint.

The search starts from the queried goal, checks the operator's clause for
every goal against the hull of the goals, and for failing goals asks for a
witness drawn from the goals and the over-approximation (preferring the
goals).  The distributions the witness uses become new goals.  When no more
progress is made, goals that still fail are discarded until the remaining
ones form a post-fixpoint.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

from .dist import Dist
from .polyhedra import CapExceeded
from .polytope import Polytope

Refine = Callable[[str, dict], Polytope]
Clause = Callable[[str, Dist, dict], bool]
# witness(x, theta, goals, over) -> list of (variable, distribution) or None if
# theta fails the clause even against ``over``
Witness = Callable[[str, Dist, dict, dict], "list[tuple[str, Dist]] | None"]


@dataclass
class Bracket:
    variables: Sequence[str]
    states: Sequence[str]
    refine: Refine
    clause: Clause
    witness: Witness
    over: dict
    max_rounds: int
    expansions: int = 12
    max_goals: int = 400
    rounds: int = 0
    exact: bool = False
    trace: list = field(default_factory=list)
    goals: dict = field(default_factory=dict)
    under: dict = field(default_factory=dict)
    stats: dict = field(default_factory=lambda: {"certify": 0, "witness": 0})

    def __post_init__(self):
        self.over = dict(self.over)
        self.trace.append(dict(self.over))
        for x in self.variables:
            self.goals.setdefault(x, set())
            self.under.setdefault(x, Polytope.empty(self.states))

    # bounds from above

    def step(self) -> bool:
        """One refinement round; returns True if something shrank."""
        changed = False
        for x in self.variables:
            new = self.refine(x, self.over)
            if new != self.over[x]:
                self.over[x] = new
                changed = True
        self.rounds += 1
        self.trace.append(dict(self.over))
        if not changed:
            self.exact = True
            self.under = dict(self.over)
        return changed

    def run(self, rounds: int) -> None:
        for _ in range(rounds):
            if self.exact or self.rounds >= self.max_rounds:
                return
            self.step()

    # bounds from below

    def _hulls(self) -> dict:
        return {x: Polytope(self.states, self.goals[x]) for x in self.variables}

    def _total(self) -> int:
        return sum(len(g) for g in self.goals.values())

    def certify(self) -> None:
        self.stats["certify"] += 1
        for x in self.variables:
            self.goals[x] = {g for g in self.goals[x] if self.over[x].contains(g)}
        for _ in range(self.expansions):
            hull = self._hulls()
            failing = [(x, g) for x in self.variables for g in sorted(self.goals[x]) if not self.clause(x, g, hull)]
            if not failing:
                break
            grew = False
            for x, g in failing:
                self.stats["witness"] += 1
                found = self.witness(x, g, hull, self.over)
                if found is None:
                    self.goals[x].discard(g)
                    continue
                for y, d in found:
                    if d not in self.goals[y] and not hull[y].contains(d) and self._total() < self.max_goals:
                        self.goals[y].add(d)
                        grew = True
            if not grew:
                break
        # largest post-fixpoint spanned by a subset of the goals
        while True:
            hull = self._hulls()
            bad = [(x, g) for x in self.variables for g in self.goals[x] if not self.clause(x, g, hull)]
            if not bad:
                break
            for x, g in bad:
                self.goals[x].discard(g)
        self.under = hull

    # queries

    def seed_points(self) -> None:
        for x in self.variables:
            self.goals[x].update(g for g in self.over[x].generators if g.is_point())

    def decide(self, x: str, theta: Dist) -> bool:
        """Is ``theta`` in the greatest fixpoint's value for ``x``?"""
        return self.decide_with(lambda P: P[x].contains(theta), lambda goals, over: [(x, theta)], f"{theta} in {x}")

    def decide_with(self, test: Callable[[dict], bool], witness: Callable, what: str = "query") -> bool:
        """Decide a query that is monotone in the variables' values.

        ``test(values)`` evaluates the query; ``witness(goals, over)`` names
        the goals a positive answer relies on (or None if there is none).
        """
        if not self.stats.get("seeded"):
            self.stats["seeded"] = 1
            self.seed_points()
        while True:
            if not test(self.over):
                return False
            if self.exact or test(self.under):
                return True
            found = witness(self._hulls(), self.over)
            for y, d in found or ():
                self.goals[y].add(d)
            self.certify()
            if test(self.under):
                return True
            if self.rounds >= self.max_rounds:
                raise CapExceeded(f"{what} undecided after {self.rounds} refinement rounds")
            self.run(max(1, self.rounds // 2))
