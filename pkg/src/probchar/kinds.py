"""The behavioural relations handled by the toolkit."""

from __future__ import annotations

from enum import Enum


class RelationKind(Enum):
    StrongProbBisim = "strong-bisim"
    StrongProbSim = "strong-sim"
    WeakProbBisim = "weak-bisim"
    WeakProbSim = "weak-sim"
    ForwardSim = "forward-sim"
    FailureSim = "failure-sim"
    HJ90Bisim = "hj-bisim"
    JL91Sim = "jl-sim"

    @classmethod
    def parse(cls, name: str) -> RelationKind:
        for k in cls:
            if name in (k.value, k.name):
                return k
        raise ValueError(f"unknown relation kind {name!r}; expected one of " + ", ".join(k.value for k in cls))

    @property
    def is_bisim(self) -> bool:
        return self in (RelationKind.StrongProbBisim, RelationKind.WeakProbBisim, RelationKind.HJ90Bisim)

    @property
    def semantics(self) -> str:
        strong = (RelationKind.StrongProbBisim, RelationKind.StrongProbSim, RelationKind.HJ90Bisim, RelationKind.JL91Sim)
        return "strong" if self in strong else "weak"

    @property
    def state_to_dist(self) -> bool:
        """Forward and failure simulation relate states to distributions."""
        return self in (RelationKind.ForwardSim, RelationKind.FailureSim)

    @property
    def combined(self) -> bool:
        """Matching may use convex combinations of transitions."""
        return self not in (RelationKind.HJ90Bisim, RelationKind.JL91Sim)

    @property
    def needs_divergence_free(self) -> bool:
        return self.semantics == "weak"

    @property
    def has_charform(self) -> bool:
        return self.combined


CHARFORM_KINDS = tuple(k for k in RelationKind if k.has_charform)
