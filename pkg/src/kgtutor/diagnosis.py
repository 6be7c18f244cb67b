"""Three-way ground truth for a proposed next step.

A claim that is not a valid edge from the state is Incorrect. A valid edge is
Optimal when it lowers the distance to the conclusion by one and a valid
alternative when the distance stays put. Distances that hit a search cap give
Indeterminate instead of a guess.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

from .solutionspace import (
    EdgeReason,
    ProofState,
    SolutionSpace,
    StepClaim,
    Unreachable,
    edge_exists,
)

__all__ = [
    "DiagLabel",
    "DiagReason",
    "Diagnosis",
    "ProblemMismatch",
    "ParseFailure",
    "StepClaim",
    "classify",
    "map_agent_label",
]


class DiagLabel(str, enum.Enum):
    OPTIMAL = "Optimal"
    VALID_ALTERNATIVE = "ValidAlternative"
    INCORRECT = "Incorrect"
    INDETERMINATE = "Indeterminate"


class DiagReason(str, enum.Enum):
    DISTANCE_REDUCED = "DistanceReduced"
    DISTANCE_UNCHANGED = "DistanceUnchanged"
    UNKNOWN_PARENT = "UnknownParent"
    REDUNDANT = "Redundant"
    BAD_JUSTIFICATION = "BadJustification"
    CAP_LIMITED = "CapLimited"


class ProblemMismatch(ValueError):
    pass


@dataclass(frozen=True)
class Diagnosis:
    label: DiagLabel
    reason: DiagReason
    d_before: int | None = None
    d_after: int | None = None
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "label": self.label.value,
            "reason": self.reason.value,
            "d_before": self.d_before,
            "d_after": self.d_after,
            "detail": self.detail,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Diagnosis":
        return cls(DiagLabel(data["label"]), DiagReason(data["reason"]),
                   data.get("d_before"), data.get("d_after"), data.get("detail", ""))


_EDGE_TO_REASON = {
    EdgeReason.UNKNOWN_PARENT: DiagReason.UNKNOWN_PARENT,
    EdgeReason.REDUNDANT: DiagReason.REDUNDANT,
    EdgeReason.BAD_JUSTIFICATION: DiagReason.BAD_JUSTIFICATION,
}


def _as_int(d: int | Unreachable) -> int | None:
    return d if isinstance(d, int) else None


def classify(space: SolutionSpace, state: ProofState, claim: StepClaim) -> Diagnosis:
    """Label ``claim`` as a next step from ``state`` against the solution space."""
    problem = space.problem
    if state.problem.conclusion != problem.conclusion or set(state.problem.premises) != set(
        problem.premises
    ):
        raise ProblemMismatch(f"state belongs to {state.problem.id!r}, space to {problem.id!r}")

    known = tuple(state.known)
    check = edge_exists(space, state, claim)
    if not check:
        # the state's distance is still recorded for tier analyses
        return Diagnosis(DiagLabel.INCORRECT, _EDGE_TO_REASON[check.reason],
                         _as_int(space.distance_of(known)), detail=check.detail)

    after = known + (claim.statement,)
    # both distances must come from the same frame, so leave the stored space
    # together when either state does
    frame = space
    if not all(f in space.index for f in after):
        frame = space._local_space(known, extra=(claim.statement,))
    d_before = frame.distance_of(known)
    d_after = frame.distance_of(after)

    if (isinstance(d_before, Unreachable) and d_before.capped) or (
        isinstance(d_after, Unreachable) and d_after.capped
    ):
        return Diagnosis(DiagLabel.INDETERMINATE, DiagReason.CAP_LIMITED,
                         _as_int(d_before), _as_int(d_after))
    if isinstance(d_before, int) and isinstance(d_after, int) and d_after == d_before - 1:
        return Diagnosis(DiagLabel.OPTIMAL, DiagReason.DISTANCE_REDUCED, d_before, d_after)
    return Diagnosis(DiagLabel.VALID_ALTERNATIVE, DiagReason.DISTANCE_UNCHANGED,
                     _as_int(d_before), _as_int(d_after))


class ParseFailure(ValueError):
    def __init__(self, raw: str):
        super().__init__(f"unrecognized correctness label: {raw!r}")
        self.raw = raw


_AGENT_LABELS = {
    "correct": DiagLabel.OPTIMAL,
    "optimal": DiagLabel.OPTIMAL,
    "suboptimal": DiagLabel.VALID_ALTERNATIVE,
    "validalternative": DiagLabel.VALID_ALTERNATIVE,
    "incorrect": DiagLabel.INCORRECT,
}


def map_agent_label(raw: str) -> DiagLabel:
    """Map an agent's correctness field onto the oracle vocabulary.

    Accepts Correct/Suboptimal/Incorrect and Optimal/Valid Alternative in any
    case, with surrounding punctuation ignored. Anything else raises
    :class:`ParseFailure`.
    """
    key = "".join(ch for ch in str(raw).lower() if ch.isalpha())
    if key not in _AGENT_LABELS:
        raise ParseFailure(raw)
    return _AGENT_LABELS[key]
