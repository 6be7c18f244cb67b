"""File formats: problems, proof states, solution spaces, pair corpora, rubrics.

Problems, states and spaces are JSON documents. Pair corpora are JSONL with
one record per line so runs can append and resume. Rubric scores are CSV with
a header row. Formulas are always stored as canonical strings.
"""
from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Iterator, Mapping, Sequence

from .diagnosis import Diagnosis
from .formula import ParseError, parse
from .rules import RuleId
from .solutionspace import (
    DerivedStep,
    Hyperedge,
    JustificationError as _StateJustificationError,
    Problem,
    ProofState,
    SaturationConfig,
    SolutionSpace,
    StepClaim,
)

__all__ = [
    "SchemaError",
    "FormulaSyntaxError",
    "JustificationError",
    "ExcludedLevelWarning",
    "PairRecord",
    "RubricRecord",
    "problem_to_dict",
    "problem_from_dict",
    "load_problem",
    "save_problem",
    "load_problems",
    "state_to_dict",
    "load_states",
    "save_states",
    "claim_to_dict",
    "claim_from_dict",
    "load_claim",
    "space_to_dict",
    "space_from_dict",
    "save_space",
    "load_space",
    "read_pairs",
    "write_pairs",
    "append_pair",
    "dumps_pair",
    "import_rubric",
    "write_rubric",
]


class SchemaError(ValueError):
    def __init__(self, line: int | None, field_name: str, message: str = ""):
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{field_name}: {message or 'invalid'}")
        self.line = line
        self.field = field_name


class FormulaSyntaxError(ValueError):
    def __init__(self, line: int | None, text: str, cause: Exception):
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}cannot parse {text!r}: {cause}")
        self.line = line
        self.text = text


class JustificationError(ValueError):
    def __init__(self, line: int | None, message: str):
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{message}")
        self.line = line


class ExcludedLevelWarning(UserWarning):
    pass


def _formula(text: Any, line: int | None, name: str):
    if not isinstance(text, str):
        raise SchemaError(line, name, "expected a formula string")
    try:
        return parse(text)
    except ParseError as exc:
        raise FormulaSyntaxError(line, text, exc) from exc


def _require(data: Mapping, key: str, line: int | None, kind=None):
    if not isinstance(data, Mapping):
        raise SchemaError(line, key, "expected an object")
    if key not in data:
        raise SchemaError(line, key, "missing")
    value = data[key]
    if kind is not None and not isinstance(value, kind):
        raise SchemaError(line, key, f"expected {getattr(kind, '__name__', kind)}")
    return value


def _rule(text: Any, line: int | None) -> RuleId:
    try:
        return RuleId(text)
    except ValueError:
        raise SchemaError(line, "rule", f"unknown rule {text!r}") from None


# -- problems ----------------------------------------------------------------


def problem_to_dict(p: Problem) -> dict:
    return {
        "id": p.id,
        "level": p.level,
        "premises": [f.text for f in p.premises],
        "conclusion": p.conclusion.text,
    }


def problem_from_dict(data: Mapping, line: int | None = None) -> Problem:
    premises = _require(data, "premises", line, list)
    problem = Problem(
        str(_require(data, "id", line)),
        tuple(_formula(t, line, "premises") for t in premises),
        _formula(_require(data, "conclusion", line), line, "conclusion"),
        data.get("level"),
    )
    if problem.excluded_level:
        warnings.warn(f"problem {problem.id!r} is level {problem.level}; levels 1 and 7 "
                      "are normally excluded", ExcludedLevelWarning, stacklevel=3)
    return problem


def _read_json(path: str | Path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(exc.lineno, "json", exc.msg) from exc


def _write_json(path: str | Path, data) -> None:
    Path(path).write_text(json.dumps(data, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def load_problem(path: str | Path) -> Problem:
    return problem_from_dict(_read_json(path))


def save_problem(path: str | Path, problem: Problem) -> None:
    _write_json(path, problem_to_dict(problem))


def load_problems(directory: str | Path) -> list[Problem]:
    """Every ``*.json`` problem in a directory, sorted by file name."""
    return [load_problem(p) for p in sorted(Path(directory).glob("*.json"))]


# -- claims and states ---------------------------------------------------------


def claim_to_dict(c: StepClaim) -> dict:
    return {
        "statement": c.statement.text,
        "rule": c.rule.value if isinstance(c.rule, RuleId) else str(c.rule),
        "parents": [p.text for p in c.parents],
        "candidates_text": c.candidates_text,
        "reasoning_text": c.reasoning_text,
    }


def claim_from_dict(data: Mapping, line: int | None = None) -> StepClaim:
    parents = _require(data, "parents", line, list)
    return StepClaim(
        _formula(_require(data, "statement", line), line, "statement"),
        str(_require(data, "rule", line)),
        tuple(_formula(t, line, "parents") for t in parents),
        data.get("candidates_text"),
        data.get("reasoning_text"),
    )


def load_claim(path: str | Path) -> StepClaim:
    return claim_from_dict(_read_json(path))


def _step_to_dict(s: DerivedStep) -> dict:
    return {"statement": s.statement.text, "rule": s.rule.value,
            "parents": [p.text for p in s.parents]}


def state_to_dict(state: ProofState) -> dict:
    out: dict[str, Any] = {"id": state.id,
                           "intermediates": [_step_to_dict(s) for s in state.derived]}
    if state.solution_context is not None:
        out["solution_context"] = claim_to_dict(state.solution_context)
    return out


def _state_from_dict(problem: Problem, data: Mapping, line: int | None) -> ProofState:
    steps = []
    for raw in _require(data, "intermediates", line, list):
        parents = _require(raw, "parents", line, list)
        steps.append(DerivedStep(
            _formula(_require(raw, "statement", line), line, "statement"),
            _rule(_require(raw, "rule", line), line),
            tuple(_formula(t, line, "parents") for t in parents),
        ))
    ctx = data.get("solution_context")
    state = ProofState(problem, tuple(steps), data.get("id"),
                       claim_from_dict(ctx, line) if ctx else None)
    try:
        state.validate()
    except _StateJustificationError as exc:
        raise JustificationError(line, str(exc)) from exc
    return state


def load_states(path: str | Path) -> list[ProofState]:
    """States file: ``{"problem": {...}, "states": [{"id", "intermediates", ...}]}``.

    Every intermediate is re-checked; an invalid one raises
    :class:`JustificationError` carrying the 1-based state number as ``line``.
    """
    doc = _read_json(path)
    problem = problem_from_dict(_require(doc, "problem", None, dict))
    out = []
    for n, raw in enumerate(_require(doc, "states", None, list), start=1):
        out.append(_state_from_dict(problem, raw, n))
    return out


def save_states(path: str | Path, states: Sequence[ProofState]) -> None:
    if not states:
        raise ValueError("no states to save")
    problem = states[0].problem
    _write_json(path, {"problem": problem_to_dict(problem),
                       "states": [state_to_dict(s) for s in states]})


# -- solution spaces ---------------------------------------------------------


def space_to_dict(space: SolutionSpace) -> dict:
    return {
        "problem": problem_to_dict(space.problem),
        "config": space.config.to_dict(),
        "saturation_complete": space.saturation_complete,
        "statements": [f.text for f in space.statements],
        "derivations": [{"result": e.result, "rule": e.rule.value, "parents": list(e.parents)}
                        for e in space.derivations],
        "candidates": [f.text for f in space.candidates],
    }


def space_from_dict(data: Mapping) -> SolutionSpace:
    problem = problem_from_dict(_require(data, "problem", None, dict))
    statements = [_formula(t, None, "statements") for t in _require(data, "statements", None, list)]
    edges = []
    for n, raw in enumerate(_require(data, "derivations", None, list)):
        parents = tuple(int(i) for i in _require(raw, "parents", n, list))
        result = int(_require(raw, "result", n))
        if not 0 <= result < len(statements) or any(not 0 <= i < len(statements) for i in parents):
            raise SchemaError(n, "derivations", "index out of range")
        edges.append(Hyperedge(result, _rule(_require(raw, "rule", n), n), parents))
    cands = [_formula(t, None, "candidates") for t in data.get("candidates", [])]
    return SolutionSpace(problem, SaturationConfig.from_dict(data.get("config", {})), statements,
                         edges, bool(_require(data, "saturation_complete", None)), cands)


def save_space(path: str | Path, space: SolutionSpace) -> None:
    Path(path).write_text(json.dumps(space_to_dict(space), ensure_ascii=False) + "\n",
                          encoding="utf-8")


def load_space(path: str | Path) -> SolutionSpace:
    return space_from_dict(_read_json(path))


# -- pair records ----------------------------------------------------------------


PAIR_FIELDS = (
    "instance_id", "problem_id", "state", "solution_context", "claim", "truth", "condition",
    "model_name", "agent_label", "feedback_text", "attempts_used", "flagged",
    "step_complexity", "config_hash",
)


@dataclass
class PairRecord:
    """One diagnosed solution paired with one agent's feedback."""

    instance_id: str
    problem_id: str
    state: dict
    solution_context: dict
    claim: dict
    truth: Diagnosis
    condition: str
    model_name: str
    agent_label: dict  # {"raw": str, "mapped": label value or None}
    feedback_text: str
    attempts_used: int
    flagged: bool
    step_complexity: int | None = None
    config_hash: str | None = None
    extra: dict = field(default_factory=dict)

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.instance_id, self.model_name, self.condition)

    def to_dict(self) -> dict:
        out = {
            "instance_id": self.instance_id,
            "problem_id": self.problem_id,
            "state": self.state,
            "solution_context": self.solution_context,
            "claim": self.claim,
            "truth": self.truth.to_dict(),
            "condition": self.condition,
            "model_name": self.model_name,
            "agent_label": self.agent_label,
            "feedback_text": self.feedback_text,
            "attempts_used": self.attempts_used,
            "flagged": self.flagged,
            "step_complexity": self.step_complexity,
            "config_hash": self.config_hash,
        }
        out.update(self.extra)
        return out

    @classmethod
    def from_dict(cls, data: Mapping, line: int | None = None, strict: bool = True) -> "PairRecord":
        unknown = [k for k in data if k not in PAIR_FIELDS]
        if unknown and strict:
            raise SchemaError(line, unknown[0], "unknown field")
        for key in PAIR_FIELDS[:12]:
            _require(data, key, line)
        try:
            truth = Diagnosis.from_dict(data["truth"])
        except (KeyError, ValueError, TypeError) as exc:
            raise SchemaError(line, "truth", str(exc)) from exc
        label = data["agent_label"]
        if not isinstance(label, Mapping) or "raw" not in label or "mapped" not in label:
            raise SchemaError(line, "agent_label", "expected {raw, mapped}")
        return cls(
            instance_id=str(data["instance_id"]),
            problem_id=str(data["problem_id"]),
            state=data["state"],
            solution_context=data["solution_context"],
            claim=data["claim"],
            truth=truth,
            condition=str(data["condition"]),
            model_name=str(data["model_name"]),
            agent_label=dict(label),
            feedback_text=str(data["feedback_text"]),
            attempts_used=int(data["attempts_used"]),
            flagged=bool(data["flagged"]),
            step_complexity=data.get("step_complexity"),
            config_hash=data.get("config_hash"),
            extra={k: data[k] for k in unknown},
        )

    def metric_row(self) -> dict:
        """Flat view for :mod:`kgtutor.metrics` report functions."""
        return {
            "model": self.model_name,
            "condition": self.condition,
            "truth": self.truth.label,
            "pred": self.agent_label.get("mapped"),
            "complexity": self.step_complexity,
            "distance": self.truth.d_before,
            "rule": self.claim.get("rule"),
        }


def dumps_pair(record: PairRecord) -> str:
    return json.dumps(record.to_dict(), ensure_ascii=False, separators=(",", ":"))


def iter_pairs(path: str | Path, strict: bool = True) -> Iterator[PairRecord]:
    with Path(path).open(encoding="utf-8") as fh:
        for n, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(n, "json", exc.msg) from exc
            yield PairRecord.from_dict(data, n, strict)


def read_pairs(path: str | Path, strict: bool = True) -> list[PairRecord]:
    return list(iter_pairs(path, strict))


def write_pairs(path: str | Path, records: Iterable[PairRecord]) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for r in records:
            fh.write(dumps_pair(r) + "\n")


def append_pair(path: str | Path, record: PairRecord) -> None:
    with Path(path).open("a", encoding="utf-8") as fh:
        fh.write(dumps_pair(record) + "\n")
        fh.flush()


# -- rubric ---------------------------------------------------------------------


RUBRIC_SCORES = ("correctness", "error_identification", "revealing", "actionability")
RUBRIC_COLUMNS = ("pair_id", "rater_id") + RUBRIC_SCORES


@dataclass(frozen=True)
class RubricRecord:
    pair_id: str
    rater_id: str
    correctness: int
    error_identification: int
    revealing: int
    actionability: int

    def __post_init__(self) -> None:
        for name in RUBRIC_SCORES:
            if getattr(self, name) not in (1, 2, 3):
                raise SchemaError(None, name, "score must be 1, 2 or 3")


def import_rubric(path: str | Path) -> list[RubricRecord]:
    out = []
    with Path(path).open(encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in RUBRIC_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise SchemaError(1, missing[0], "missing column")
        for n, row in enumerate(reader, start=2):
            scores = {}
            for name in RUBRIC_SCORES:
                try:
                    v = int(row[name])
                except (TypeError, ValueError):
                    raise SchemaError(n, name, f"not an integer: {row[name]!r}") from None
                if v not in (1, 2, 3):
                    raise SchemaError(n, name, f"score {v} outside 1-3")
                scores[name] = v
            out.append(RubricRecord(row["pair_id"], row["rater_id"], **scores))
    return out


def write_rubric(path: str | Path, records: Iterable[RubricRecord]) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RUBRIC_COLUMNS)
        for r in records:
            w.writerow([getattr(r, c) for c in RUBRIC_COLUMNS])
