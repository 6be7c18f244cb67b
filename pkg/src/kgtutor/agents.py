"""Agent prompts, model calls and validated exchanges.

Four roles share one user-message layout (givens, intermediates, conclusion)
and differ in the system template and in how much of the expert next step
they see. Every model call goes through a provider object so tests can swap
the HTTP client for a scripted mock.
"""
from __future__ import annotations

import enum
import hashlib
import json
import os
import re
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Protocol, Sequence

import httpx

from .formula import Formula, ParseError, parse
from .rules import RuleId, parse_rule_id
from .solutionspace import Problem, ProofState, StepClaim

__all__ = [
    "Role",
    "Condition",
    "SYSTEM_TEMPLATES",
    "REQUIRED_FIELDS",
    "MissingArgument",
    "ModelError",
    "TransportFailure",
    "ModelTimeout",
    "AuthFailure",
    "EmptyResponse",
    "UnscriptedRequest",
    "ModelEndpoint",
    "AgentResponse",
    "HttpProvider",
    "MockProvider",
    "AuditLog",
    "render_prompt",
    "render_context",
    "call_model",
    "request_hash",
    "parse_response",
    "validate_fields",
    "validated_exchange",
    "claim_from_fields",
]


class Role(str, enum.Enum):
    STUDENT = "Student"
    PEER = "Peer"
    TEACHER = "Teacher"
    JUDGE = "Judge"


class Condition(str, enum.Enum):
    PEER = "Peer"
    TEACHER = "Teacher"
    JUDGE = "Judge"

    @property
    def role(self) -> Role:
        return Role(self.value)

    @classmethod
    def parse(cls, text: str) -> "Condition":
        for c in cls:
            if c.value.lower() == text.strip().lower():
                return c
        raise ValueError(f"unknown condition {text!r}")


SYSTEM_TEMPLATES: dict[Role, str] = {
    Role.STUDENT: """\
Role: You are a Student in an undergraduate Discrete Structures course solving a propositional logic proof. Your task is to produce the single most optimal next step that advances the proof toward the conclusion.

Task:
1. Review the givens and intermediate steps.
2. Propose 2-3 candidate next steps.
3. Select the candidate that most directly advances toward the conclusion.
4. Justify your choice and output the selected next step.

Constraints:
- Output exactly one next step in symbolic notation only.
- Use only predefined inference rules (e.g., MP, MT, Conj, DS).
- Parent statements must be actual expressions, not line numbers.

Response Format:
- CANDIDATES: 2-3 candidate steps with brief justification
- REASONING: Why the selected step is optimal
- NEXT_STEP: Symbolic expression
- RULE: Inference rule (short name)
- PARENT_STATEMENTS: Supporting expressions""",
    Role.PEER: """\
Role: You are a Peer evaluating a student's proposed next step in a propositional logic proof, with access to the KG-derived optimal step.

Task:
1. Analyze how the optimal step is derived (rule and parent statements).
2. Evaluate the student's candidates, reasoning, and chosen next step.
3. Classify the student's step as Correct, Valid Alternative, or Incorrect.
4. Provide brief, scaffolded feedback guiding the student toward the optimal step.

Constraints:
- Do not reveal the optimal step, its rule, or parent statements.
- Acknowledge what the student did correctly before addressing errors.
- Use Socratic questions to guide reasoning; keep feedback concise (2-3 sentences).
- Use predefined inference rule short names only.

Response Format:
- STUDENT_ERRORS: Brief explanation or Correct
- NEXT_STEP_CORRECTNESS: Correct / Suboptimal / Incorrect
- PEER_FEEDBACK: Scaffolded guidance without answer revelation""",
    Role.TEACHER: """\
Role: You are a Teacher evaluating a student's proposed next step in a propositional logic proof, with access to the complete solution (KNOWLEDGE_BASE_STEPS).

Task:
1. Compare the student's response against the knowledge-base solution.
2. Identify errors in the student's logic, rule usage, or reasoning.
3. Classify the student's next step as Correct, Valid Alternative, or Incorrect.
4. Provide brief, scaffolded feedback guiding the student toward the correct solution.

Constraints:
- Do not reveal the exact next step, rule, or parent statements from the solution.
- Acknowledge correct aspects of the student's attempt before addressing errors.
- Use Socratic questions to guide reasoning; keep feedback concise (2-3 sentences).
- Refer to the student's candidates when relevant.
- Use predefined inference rule short names only.

Response Format:
- STUDENT_ERRORS: Brief explanation or Correct
- NEXT_STEP_CORRECTNESS: Correct / Suboptimal / Incorrect
- TEACHER_FEEDBACK: Scaffolded guidance without answer revelation""",
    Role.JUDGE: """\
Role: You are an expert pedagogical AI Judge for propositional logic proof problems, with access to the complete solution (KNOWLEDGE_BASE_STEPS). You evaluate both the student's proposed next step and the Teacher's feedback.

Task:
1. Compare the student's response against the knowledge-base solution.
2. Identify errors in the student's reasoning, if any.
3. Classify the student's next step as Correct, Valid Alternative, or Incorrect.
4. Evaluate whether the Teacher's feedback correctly guides the student.
5. Either enhance the Teacher's feedback or override it with corrected guidance.

Constraints:
- Do not reveal the exact next step, rule, or parent statements from the solution.
- Acknowledge correct aspects of the student's attempt before addressing errors.
- Use Socratic questions to guide reasoning; scaffold rather than instruct.
- Override Teacher feedback if it is incorrect, misleading, or reveals the solution.
- Keep final feedback concise (2-3 sentences) and encouraging.
- Use predefined inference rule short names only.

Response Format:
- STUDENT_ERRORS: Brief explanation or Correct
- NEXT_STEP_CORRECTNESS: Correct / Suboptimal / Incorrect
- TEACHER_FEEDBACK_CORRECTNESS: Assessment of Teacher feedback
- JUDGE_ACTION: Enhanced or Overridden
- FINAL_FEEDBACK: Judge-approved scaffolded guidance""",
}

REQUIRED_FIELDS: dict[Role, tuple[str, ...]] = {
    Role.STUDENT: ("CANDIDATES", "REASONING", "NEXT_STEP", "RULE", "PARENT_STATEMENTS"),
    Role.PEER: ("STUDENT_ERRORS", "NEXT_STEP_CORRECTNESS", "PEER_FEEDBACK"),
    Role.TEACHER: ("STUDENT_ERRORS", "NEXT_STEP_CORRECTNESS", "TEACHER_FEEDBACK"),
    Role.JUDGE: ("STUDENT_ERRORS", "NEXT_STEP_CORRECTNESS", "TEACHER_FEEDBACK_CORRECTNESS",
                 "JUDGE_ACTION", "FINAL_FEEDBACK"),
}

FEEDBACK_FIELD = {Role.PEER: "PEER_FEEDBACK", Role.TEACHER: "TEACHER_FEEDBACK",
                  Role.JUDGE: "FINAL_FEEDBACK"}

_JSON_NOTE = "Respond with a single JSON object whose keys are exactly: {keys}."


def system_text(role: Role) -> str:
    keys = ", ".join(REQUIRED_FIELDS[role])
    return SYSTEM_TEMPLATES[role] + "\n\n" + _JSON_NOTE.format(keys=keys)


class MissingArgument(ValueError):
    pass


# -- rendering ---------------------------------------------------------------


def _join_parents(parents: Sequence[Formula]) -> str:
    texts = [p.text for p in parents]
    if len(texts) <= 1:
        return "".join(texts)
    return ", ".join(texts[:-1]) + " and " + texts[-1]


def render_context(condition: Condition | Role, context: StepClaim) -> str:
    """The slice of the expert next step a feedback role is allowed to see."""
    role = condition.role if isinstance(condition, Condition) else condition
    if role is Role.PEER:
        return context.statement.text
    rule = context.rule
    if isinstance(rule, RuleId):
        return (f"Derive {context.statement.text} from {_join_parents(context.parents)} "
                f"using the {rule.full_name} rule. ({rule.value})")
    return f"Derive {context.statement.text} from {_join_parents(context.parents)} using {rule}."


def _render_state(problem: Problem, state: ProofState) -> list[str]:
    lines = ["GIVENS:"]
    number: dict[Formula, int] = {}
    for n, p in enumerate(problem.premises, start=1):
        number[p] = n
        lines.append(f"({n}) {p.text}")
    lines.append("INTERMEDIATE STEPS:")
    if not state.derived:
        lines.append("(none)")
    start = len(problem.premises) + 1
    for n, step in enumerate(state.derived, start=start):
        refs = ", ".join(f"({number[p]})" for p in step.parents if p in number)
        lines.append(f"({n}) {step.statement.text} [{step.rule.value}: {refs}]")
        number[step.statement] = n
    lines.append(f"CONCLUSION: {problem.conclusion.text}")
    return lines


def _render_claim(claim: StepClaim) -> list[str]:
    rule = claim.rule.value if isinstance(claim.rule, RuleId) else str(claim.rule)
    return [
        "STUDENT RESPONSE:",
        f"CANDIDATES: {claim.candidates_text or ''}",
        f"REASONING: {claim.reasoning_text or ''}",
        f"NEXT_STEP: {claim.statement.text}",
        f"RULE: {rule}",
        f"PARENT_STATEMENTS: {'; '.join(p.text for p in claim.parents)}",
    ]


def render_prompt(
    role: Role,
    problem: Problem,
    state: ProofState,
    claim: StepClaim | None = None,
    solution_context: StepClaim | None = None,
    peer_feedback: str | None = None,
) -> tuple[str, str]:
    """Build the (system, user) message pair for one agent call.

    Output depends only on the arguments, so identical inputs give
    byte-identical prompts.
    """
    role = Role(role)
    lines = _render_state(problem, state)
    if role is not Role.STUDENT:
        if claim is None:
            raise MissingArgument(f"{role.value} prompt needs the student's claim")
        if solution_context is None:
            raise MissingArgument(f"{role.value} prompt needs the solution context")
        lines.append("")
        lines.extend(_render_claim(claim))
        lines.append("")
        if role is Role.PEER:
            lines.append("OPTIMAL NEXT STEP:")
        else:
            lines.append("KNOWLEDGE_BASE_STEPS:")
        lines.append(render_context(role, solution_context))
        if role is Role.JUDGE:
            if peer_feedback is None:
                raise MissingArgument("Judge prompt needs the feedback under review")
            lines.append("")
            lines.append("TEACHER_FEEDBACK (under review):")
            lines.append(peer_feedback)
    return system_text(role), "\n".join(lines) + "\n"


# -- model calls ---------------------------------------------------------------


class ModelError(RuntimeError):
    pass


class TransportFailure(ModelError):
    pass


class ModelTimeout(ModelError):
    pass


class AuthFailure(ModelError):
    pass


class EmptyResponse(ModelError):
    pass


class UnscriptedRequest(ModelError):
    pass


@dataclass(frozen=True)
class ModelEndpoint:
    name: str
    base_url: str = "mock://"
    api_key_env: str | None = None
    model: str | None = None
    temperature: float = 0.0
    max_attempts: int = 3
    request_timeout: float = 60.0
    max_concurrency: int = 4

    def __post_init__(self) -> None:
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be at least 1")
        if self.max_concurrency < 1:
            raise ValueError("max_concurrency must be at least 1")

    @property
    def model_id(self) -> str:
        return self.model or self.name

    def api_key(self) -> str | None:
        if not self.api_key_env:
            return None
        key = os.environ.get(self.api_key_env)
        if not key:
            raise AuthFailure(f"environment variable {self.api_key_env} is not set")
        return key

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "base_url": self.base_url,
            "api_key_env": self.api_key_env,
            "model": self.model,
            "temperature": self.temperature,
            "max_attempts": self.max_attempts,
            "request_timeout": self.request_timeout,
            "max_concurrency": self.max_concurrency,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "ModelEndpoint":
        known = {k: data[k] for k in cls.__dataclass_fields__ if k in data}
        return cls(**known)


class Provider(Protocol):
    def complete(self, endpoint: ModelEndpoint, system: str, user: str) -> str: ...


def request_hash(endpoint: ModelEndpoint | str, system: str, user: str) -> str:
    name = endpoint.name if isinstance(endpoint, ModelEndpoint) else endpoint
    blob = json.dumps([name, system, user], ensure_ascii=False).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


class HttpProvider:
    """Chat-completions client over httpx.

    ``transport`` lets tests route requests to an ``httpx.MockTransport``.
    """

    def __init__(self, transport: httpx.BaseTransport | None = None):
        self.transport = transport

    def complete(self, endpoint: ModelEndpoint, system: str, user: str) -> str:
        key = endpoint.api_key()
        headers = {"Content-Type": "application/json"}
        if key:
            headers["Authorization"] = f"Bearer {key}"
        body = {
            "model": endpoint.model_id,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
            "temperature": endpoint.temperature,
        }
        url = endpoint.base_url.rstrip("/") + "/chat/completions"
        try:
            with httpx.Client(transport=self.transport, timeout=endpoint.request_timeout) as client:
                resp = client.post(url, json=body, headers=headers)
        except httpx.TimeoutException as exc:
            raise ModelTimeout(f"{endpoint.name}: {exc}") from exc
        except httpx.HTTPError as exc:
            raise TransportFailure(f"{endpoint.name}: {exc}") from exc
        if resp.status_code in (401, 403):
            raise AuthFailure(f"{endpoint.name}: HTTP {resp.status_code}")
        if resp.status_code >= 400:
            raise TransportFailure(f"{endpoint.name}: HTTP {resp.status_code}")
        try:
            content = resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise TransportFailure(f"{endpoint.name}: malformed completion payload") from exc
        if not content or not str(content).strip():
            raise EmptyResponse(f"{endpoint.name}: zero-token response")
        return str(content)


Responder = Callable[[ModelEndpoint, str, str], str]


class MockProvider:
    """Scripted stand-in for a model API.

    ``script`` maps request hashes (see :func:`request_hash`) to a response or
    a list of responses consumed one per call. ``queue`` is a list of
    responses served in order regardless of the request. Unscripted requests
    fall back to ``default`` (a string or a callable) or raise
    :class:`UnscriptedRequest` when ``strict``.
    """

    def __init__(
        self,
        script: Mapping[str, str | Sequence[str]] | None = None,
        default: str | Responder | None = None,
        strict: bool = True,
        queue: Sequence[str] | None = None,
    ):
        self.script = {k: ([v] if isinstance(v, str) else list(v)) for k, v in (script or {}).items()}
        self.default = default
        self.strict = strict and default is None
        self.queue = list(queue or [])
        self.calls: list[tuple[str, str, str]] = []
        self._lock = threading.Lock()

    def complete(self, endpoint: ModelEndpoint, system: str, user: str) -> str:
        h = request_hash(endpoint, system, user)
        with self._lock:
            self.calls.append((endpoint.name, system, user))
            if h in self.script and self.script[h]:
                got = self.script[h].pop(0) if len(self.script[h]) > 1 else self.script[h][0]
            elif self.queue:
                got = self.queue.pop(0)
            elif self.default is not None:
                got = self.default(endpoint, system, user) if callable(self.default) else self.default
            else:
                raise UnscriptedRequest(f"no scripted response for request {h[:12]}")
        if not got or not got.strip():
            raise EmptyResponse(f"{endpoint.name}: zero-token response")
        return got


class AuditLog:
    """Append-only JSONL record of every request and response."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()

    def write(self, entry: dict) -> None:
        line = json.dumps(entry, ensure_ascii=False, sort_keys=True)
        with self._lock, self.path.open("a", encoding="utf-8") as fh:
            fh.write(line + "\n")


def call_model(endpoint: ModelEndpoint, system: str, user: str,
               provider: Provider | None = None, audit: AuditLog | None = None) -> str:
    """One chat completion; returns the raw text."""
    provider = provider or HttpProvider()
    try:
        text = provider.complete(endpoint, system, user)
    except ModelError as exc:
        if audit:
            audit.write({"endpoint": endpoint.name, "request": request_hash(endpoint, system, user),
                         "system": system, "user": user, "error": f"{type(exc).__name__}: {exc}"})
        raise
    if audit:
        audit.write({"endpoint": endpoint.name, "request": request_hash(endpoint, system, user),
                     "system": system, "user": user, "response": text})
    return text


# -- response parsing and validation -------------------------------------------


@dataclass(frozen=True)
class AgentResponse:
    role: Role
    raw_text: str
    fields: dict[str, str]
    attempts_used: int
    flagged: bool
    errors: tuple[str, ...] = ()


_FENCE = re.compile(r"```(?:json)?\s*(.*?)```", re.S)


def _stringify(v) -> str:
    if isinstance(v, str):
        return v.strip()
    if isinstance(v, list):
        return "; ".join(_stringify(x) for x in v)
    if v is None:
        return ""
    return json.dumps(v, ensure_ascii=False)


def _parse_json(text: str) -> dict[str, str] | None:
    bodies = [m.group(1) for m in _FENCE.finditer(text)] + [text]
    for body in bodies:
        start, end = body.find("{"), body.rfind("}")
        if start < 0 or end <= start:
            continue
        try:
            obj = json.loads(body[start:end + 1])
        except json.JSONDecodeError:
            continue
        if isinstance(obj, dict):
            return {str(k).strip().upper(): _stringify(v) for k, v in obj.items()}
    return None


def _parse_labeled(text: str, names: Sequence[str]) -> dict[str, str]:
    # longest names first so TEACHER_FEEDBACK_CORRECTNESS wins over TEACHER_FEEDBACK
    alts = "|".join(re.escape(n) for n in sorted(names, key=len, reverse=True))
    pat = re.compile(rf"^[\s*#>-]*({alts})\**\s*:\s*", re.M | re.I)
    out: dict[str, str] = {}
    marks = list(pat.finditer(text))
    for i, m in enumerate(marks):
        end = marks[i + 1].start() if i + 1 < len(marks) else len(text)
        out.setdefault(m.group(1).upper(), text[m.end():end].strip())
    return out


_ALL_FIELDS = sorted({f for fs in REQUIRED_FIELDS.values() for f in fs})


def parse_response(text: str) -> dict[str, str]:
    """Fields from a JSON object, else from ``NAME: value`` lines."""
    got = _parse_json(text)
    if got is not None:
        return got
    return _parse_labeled(text, _ALL_FIELDS)


_LINE_REF = re.compile(r"^\s*(?:line|step|statement)?\s*\(?\s*\d+\s*\)?\s*\.?\s*$", re.I)


def split_parents(text: str) -> list[str]:
    parts = re.split(r"[;\n]|,(?![^()]*\))", text)
    out = []
    for p in parts:
        p = p.strip().strip("[]").strip().strip("'\"")
        if p:
            out.append(p)
    if len(out) == 1 and " and " in out[0]:
        out = [q.strip() for q in out[0].split(" and ") if q.strip()]
    return out


def validate_fields(role: Role, fields: Mapping[str, str]) -> list[str]:
    """Constraint violations for ``role``; empty when the response is usable."""
    from .diagnosis import ParseFailure, map_agent_label

    problems = [f"missing {name}" for name in REQUIRED_FIELDS[role] if not fields.get(name)]
    if problems:
        return problems
    if role is Role.STUDENT:
        try:
            parse(fields["NEXT_STEP"])
        except ParseError as exc:
            problems.append(f"NEXT_STEP does not parse: {exc}")
        parents = split_parents(fields["PARENT_STATEMENTS"])
        if not parents:
            problems.append("PARENT_STATEMENTS is empty")
        for p in parents:
            if _LINE_REF.match(p):
                problems.append(f"parent {p!r} is a line number, not an expression")
                continue
            try:
                parse(p)
            except ParseError as exc:
                problems.append(f"parent {p!r} does not parse: {exc}")
    else:
        try:
            map_agent_label(fields["NEXT_STEP_CORRECTNESS"])
        except ParseFailure as exc:
            problems.append(str(exc))
        if role is Role.JUDGE and fields["JUDGE_ACTION"].strip().lower().strip(".") not in (
            "enhanced", "overridden"
        ):
            problems.append("JUDGE_ACTION must be Enhanced or Overridden")
    return problems


_RETRY_NOTE = ("\nYour previous response could not be used ({why}). "
               "Respond again with every required field.\n")


def validated_exchange(
    endpoint: ModelEndpoint,
    role: Role,
    prompts: tuple[str, str],
    provider: Provider | None = None,
    audit: AuditLog | None = None,
) -> AgentResponse:
    """Call until the response validates, at most ``endpoint.max_attempts`` times.

    Empty completions and invalid responses consume an attempt. After the last
    attempt the response is returned with ``flagged=True`` and the last raw
    text kept. Transport, timeout and auth errors propagate.
    """
    role = Role(role)
    system, user = prompts
    raw, fields, errors = "", {}, []
    for attempt in range(1, endpoint.max_attempts + 1):
        prompt_user = user if attempt == 1 else user + _RETRY_NOTE.format(why="; ".join(errors))
        try:
            raw = call_model(endpoint, system, prompt_user, provider, audit)
        except EmptyResponse as exc:
            raw, fields, errors = "", {}, [str(exc)]
            continue
        fields = parse_response(raw)
        errors = validate_fields(role, fields)
        if not errors:
            return AgentResponse(role, raw, dict(fields), attempt, False)
    return AgentResponse(role, raw, dict(fields), endpoint.max_attempts, True, tuple(errors))


def claim_from_fields(fields: Mapping[str, str]) -> StepClaim:
    """StepClaim from validated Student fields; the rule is kept verbatim if unknown."""
    rule_text = fields["RULE"].strip()
    try:
        rule: RuleId | str = parse_rule_id(rule_text)
    except ValueError:
        rule = rule_text
    return StepClaim(
        parse(fields["NEXT_STEP"]),
        rule,
        tuple(parse(p) for p in split_parents(fields["PARENT_STATEMENTS"])),
        candidates_text=fields.get("CANDIDATES"),
        reasoning_text=fields.get("REASONING"),
    )
