"""Student simulation and feedback evaluation runs.

Both stages write JSONL in a fixed order (states in input order, models in
config order, conditions Peer, Teacher, Judge) and skip keys already on disk,
so an interrupted run resumed with the same inputs ends with the same file
as an uninterrupted one. Requests run concurrently per endpoint but records
are appended strictly in order.
"""
from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

from .agents import (
    FEEDBACK_FIELD,
    AgentResponse,
    AuditLog,
    Condition,
    ModelEndpoint,
    Provider,
    Role,
    claim_from_fields,
    render_prompt,
    validated_exchange,
)
from .diagnosis import ParseFailure, classify, map_agent_label
from .formula import complexity
from .io import (
    PairRecord,
    claim_from_dict,
    claim_to_dict,
    dumps_pair,
    problem_from_dict,
    problem_to_dict,
    state_to_dict,
)
from .metrics import DEFAULT_TIERS, TierSpec
from .solutionspace import (
    DerivedStep,
    ProofState,
    SaturationConfig,
    SolutionSpace,
    StepClaim,
    optimal_steps,
)

log = logging.getLogger(__name__)

__all__ = [
    "RunConfig",
    "ClaimRecord",
    "load_config",
    "solution_context_for",
    "simulate",
    "evaluate",
    "read_claims",
    "existing_keys",
]

CONDITION_ORDER = (Condition.PEER, Condition.TEACHER, Condition.JUDGE)


@dataclass(frozen=True)
class RunConfig:
    endpoints: tuple[ModelEndpoint, ...] = ()
    saturation: SaturationConfig = SaturationConfig()
    conditions: tuple[Condition, ...] = CONDITION_ORDER
    tiers: TierSpec = DEFAULT_TIERS

    def to_dict(self) -> dict:
        return {
            "endpoints": [e.to_dict() for e in self.endpoints],
            "saturation": self.saturation.to_dict(),
            "conditions": [c.value for c in self.conditions],
            "tiers": self.tiers.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "RunConfig":
        return cls(
            endpoints=tuple(ModelEndpoint.from_dict(e) for e in data.get("endpoints", [])),
            saturation=SaturationConfig.from_dict(data.get("saturation", {})),
            conditions=tuple(Condition.parse(c) for c in data.get("conditions",
                                                                  [c.value for c in CONDITION_ORDER])),
            tiers=TierSpec.from_dict(data.get("tiers", {})),
        )

    def digest(self) -> str:
        # endpoints enter by name and decoding settings only; keys never do
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def endpoint(self, name: str) -> ModelEndpoint:
        for e in self.endpoints:
            if e.name == name:
                return e
        raise KeyError(f"no endpoint named {name!r}")


def load_config(path: str | Path) -> RunConfig:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(data, list):
        data = {"endpoints": data}
    return RunConfig.from_dict(data)


def solution_context_for(space: SolutionSpace, state: ProofState) -> StepClaim | None:
    """The state's stored expert step, else the first optimal step of the space."""
    if state.solution_context is not None:
        return state.solution_context
    steps = optimal_steps(space, state, limit=1)
    return steps[0] if steps else None


# -- JSONL helpers --------------------------------------------------------------


def _repair_tail(path: Path) -> None:
    """Drop a trailing partial line left by an interrupted writer."""
    if not path.exists():
        return
    data = path.read_bytes()
    if data and not data.endswith(b"\n"):
        path.write_bytes(data[: data.rfind(b"\n") + 1])


def _read_jsonl(path: Path) -> list[dict]:
    if not path.exists():
        return []
    return [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]


def existing_keys(path: str | Path, fields: Sequence[str]) -> set[tuple]:
    path = Path(path)
    _repair_tail(path)
    return {tuple(r[f] for f in fields) for r in _read_jsonl(path)}


def _append(path: Path, line: str) -> None:
    with path.open("a", encoding="utf-8") as fh:
        fh.write(line + "\n")
        fh.flush()


class _Pools:
    """One thread pool per endpoint, sized by its concurrency cap."""

    def __init__(self, endpoints: Iterable[ModelEndpoint]):
        self.pools = {e.name: ThreadPoolExecutor(max_workers=e.max_concurrency,
                                                 thread_name_prefix=f"kg-{e.name}")
                      for e in endpoints}

    def submit(self, endpoint: ModelEndpoint, fn: Callable, *args) -> Future:
        return self.pools[endpoint.name].submit(fn, *args)

    def close(self, cancel: bool = False) -> None:
        for p in self.pools.values():
            p.shutdown(wait=True, cancel_futures=cancel)


def _drain_in_order(futures: list[tuple[tuple, Future]], write: Callable[[tuple, object], None],
                    pools: _Pools) -> None:
    try:
        for key, fut in futures:
            write(key, fut.result())
    except BaseException:
        pools.close(cancel=True)
        raise
    pools.close()


# -- simulation -------------------------------------------------------------------


@dataclass
class ClaimRecord:
    """One simulated student step for one (state, model)."""

    instance_id: str
    problem_id: str
    model_name: str
    problem: dict
    state: dict
    fields: dict
    raw_text: str
    attempts_used: int
    flagged: bool
    claim: dict | None
    error: str | None = None
    config_hash: str | None = None

    def to_dict(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "problem_id": self.problem_id,
            "model_name": self.model_name,
            "problem": self.problem,
            "state": self.state,
            "fields": self.fields,
            "raw_text": self.raw_text,
            "attempts_used": self.attempts_used,
            "flagged": self.flagged,
            "claim": self.claim,
            "error": self.error,
            "config_hash": self.config_hash,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "ClaimRecord":
        return cls(**{k: d.get(k) for k in cls.__dataclass_fields__})

    def proof_state(self) -> ProofState:
        problem = problem_from_dict(self.problem)
        steps = tuple(DerivedStep(s["statement"], s["rule"], tuple(s["parents"]))
                      for s in self.state["intermediates"])
        ctx = self.state.get("solution_context")
        return ProofState(problem, steps, self.state.get("id"),
                          claim_from_dict(ctx) if ctx else None)


def read_claims(path: str | Path) -> list[ClaimRecord]:
    return [ClaimRecord.from_dict(d) for d in _read_jsonl(Path(path))]


def _instance_id(state: ProofState, n: int) -> str:
    return state.id or f"{state.problem.id}#{n}"


def simulate(
    states: Sequence[ProofState],
    endpoints: Sequence[ModelEndpoint],
    out_path: str | Path,
    provider: Provider | Mapping[str, Provider] | None = None,
    audit: AuditLog | None = None,
    config_hash: str | None = None,
) -> list[ClaimRecord]:
    """One Student exchange per (state, endpoint); appends ClaimRecords to ``out_path``."""
    out = Path(out_path)
    done = existing_keys(out, ("instance_id", "model_name"))
    pools = _Pools(endpoints)
    jobs: list[tuple[tuple, Future]] = []
    for n, state in enumerate(states):
        iid = _instance_id(state, n)
        # solution contexts are stored with the state so later stages agree
        for ep in endpoints:
            if (iid, ep.name) in done:
                continue
            prompts = render_prompt(Role.STUDENT, state.problem, state)
            fut = pools.submit(ep, validated_exchange, ep, Role.STUDENT, prompts,
                               _provider_for(provider, ep), audit)
            jobs.append(((iid, state, ep), fut))

    written: list[ClaimRecord] = []

    def write(key, resp: AgentResponse) -> None:
        iid, state, ep = key
        claim, error = None, None
        if resp.flagged:
            error = "; ".join(resp.errors) or "flagged"
        else:
            try:
                claim = claim_to_dict(claim_from_fields(resp.fields))
            except Exception as exc:  # parse problems after validation are bugs, keep the row
                error = f"{type(exc).__name__}: {exc}"
        rec = ClaimRecord(iid, state.problem.id, ep.name, problem_to_dict(state.problem),
                          state_to_dict(state), resp.fields, resp.raw_text, resp.attempts_used,
                          resp.flagged, claim, error, config_hash)
        rec.state["id"] = iid
        _append(out, json.dumps(rec.to_dict(), ensure_ascii=False, separators=(",", ":")))
        written.append(rec)

    _drain_in_order(jobs, write, pools)
    return written


def _provider_for(provider, ep: ModelEndpoint):
    if isinstance(provider, Mapping):
        return provider.get(ep.name)
    return provider


# -- evaluation -------------------------------------------------------------------


@dataclass
class EvalSummary:
    written: list[PairRecord] = field(default_factory=list)
    skipped: list[tuple[str, str, str, str]] = field(default_factory=list)  # key + reason

    @property
    def flagged(self) -> int:
        return sum(r.flagged for r in self.written)


def _agent_label(resp: AgentResponse) -> dict:
    raw = resp.fields.get("NEXT_STEP_CORRECTNESS", "")
    try:
        mapped = map_agent_label(raw).value
    except ParseFailure:
        mapped = None
    return {"raw": raw, "mapped": mapped}


def evaluate(
    claims: Sequence[ClaimRecord],
    spaces: Mapping[str, SolutionSpace],
    endpoints: Sequence[ModelEndpoint],
    out_path: str | Path,
    conditions: Sequence[Condition] = CONDITION_ORDER,
    provider: Provider | Mapping[str, Provider] | None = None,
    audit: AuditLog | None = None,
    config_hash: str | None = None,
) -> EvalSummary:
    """Feedback under each condition for every simulated claim.

    Ground truth is computed from the solution space before any feedback
    call. Judge prompts carry the Peer feedback for the same instance and
    model, taken from this run or from records already in ``out_path``.
    """
    out = Path(out_path)
    conds = [c for c in CONDITION_ORDER if c in set(conditions)]
    by_name = {e.name: e for e in endpoints}
    _repair_tail(out)
    stored = {(r["instance_id"], r["model_name"], r["condition"]): r for r in _read_jsonl(out)}
    summary = EvalSummary()
    pools = _Pools(endpoints)
    jobs: list[tuple[tuple, Future]] = []

    for rec in claims:
        keys = [(rec.instance_id, rec.model_name, c.value) for c in conds]
        todo = [c for c, k in zip(conds, keys) if k not in stored]
        if not todo:
            continue
        if rec.claim is None:
            for c in todo:
                summary.skipped.append((rec.instance_id, rec.model_name, c.value,
                                        rec.error or "no usable student claim"))
                log.warning("skip %s/%s/%s: %s", rec.instance_id, rec.model_name, c.value,
                            rec.error or "no usable student claim")
            continue
        ep = by_name.get(rec.model_name)
        if ep is None:
            raise KeyError(f"no endpoint configured for model {rec.model_name!r}")
        space = spaces[rec.problem_id]
        state = rec.proof_state()
        claim = claim_from_dict(rec.claim)
        truth = classify(space, state, claim)
        context = solution_context_for(space, state)
        if context is None:
            for c in todo:
                summary.skipped.append((rec.instance_id, rec.model_name, c.value,
                                        "no solution context (conclusion already derived "
                                        "or unreachable)"))
            continue
        peer_stored = stored.get((rec.instance_id, rec.model_name, Condition.PEER.value))
        fut = pools.submit(ep, _run_unit, ep, rec, state, claim, truth, context, todo,
                           peer_stored, _provider_for(provider, ep), audit, config_hash,
                           space.config.weights)
        jobs.append(((rec.instance_id, rec.model_name), fut))

    def write(_key, records: list[PairRecord]) -> None:
        for r in records:
            _append(out, dumps_pair(r))
            summary.written.append(r)

    _drain_in_order(jobs, write, pools)
    return summary


def _run_unit(ep, rec: ClaimRecord, state, claim, truth, context, todo, peer_stored,
              provider, audit, config_hash, weights) -> list[PairRecord]:
    out: list[PairRecord] = []
    peer_feedback = peer_stored["feedback_text"] if peer_stored else None
    for cond in todo:
        role = cond.role
        if role is Role.JUDGE and peer_feedback is None:
            raise RuntimeError(f"{rec.instance_id}/{rec.model_name}: Judge needs Peer feedback; "
                               "include the Peer condition")
        prompts = render_prompt(role, state.problem, state, claim, context,
                                peer_feedback if role is Role.JUDGE else None)
        resp = validated_exchange(ep, role, prompts, provider, audit)
        feedback = resp.fields.get(FEEDBACK_FIELD[role], "")
        if role is Role.PEER:
            peer_feedback = feedback
        out.append(PairRecord(
            instance_id=rec.instance_id,
            problem_id=rec.problem_id,
            state={"problem": rec.problem, **rec.state},
            solution_context=claim_to_dict(context),
            claim={**rec.claim, "raw": rec.fields},
            truth=truth,
            condition=cond.value,
            model_name=rec.model_name,
            agent_label=_agent_label(resp),
            feedback_text=feedback,
            attempts_used=resp.attempts_used,
            flagged=resp.flagged,
            step_complexity=complexity(claim.statement, weights),
            config_hash=config_hash,
        ))
    return out
