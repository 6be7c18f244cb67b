"""Solution-space ground truth and feedback evaluation for propositional proof tutoring."""
from .diagnosis import DiagLabel, DiagReason, Diagnosis, classify, map_agent_label
from .formula import ComplexityWeights, Formula, complexity, evaluate, parse, subformulas, to_text
from .rules import RuleId, RuleKind, RuleOptions, apply_forward, check_justification, soundness_oracle
from .solutionspace import (
    Problem,
    ProofState,
    SaturationConfig,
    SolutionSpace,
    StepClaim,
    Unreachable,
    distance,
    edge_exists,
    optimal_steps,
    relevant_set,
    saturate,
)

__version__ = "0.1.0"

__all__ = [
    "ComplexityWeights",
    "DiagLabel",
    "DiagReason",
    "Diagnosis",
    "Formula",
    "Problem",
    "ProofState",
    "RuleId",
    "RuleKind",
    "RuleOptions",
    "SaturationConfig",
    "SolutionSpace",
    "StepClaim",
    "Unreachable",
    "apply_forward",
    "check_justification",
    "classify",
    "complexity",
    "distance",
    "edge_exists",
    "evaluate",
    "map_agent_label",
    "optimal_steps",
    "parse",
    "relevant_set",
    "saturate",
    "soundness_oracle",
    "subformulas",
    "to_text",
]
