"""Per-problem solution space: bounded forward-chaining saturation and distance.

The stored artifact is a hypergraph over statements: each hyperedge records
one rule application (result, rule, parents). Proof states are sets of known
statements and stay virtual; the distance of a state is the least number of
new statements that must be derived, one per step, until the conclusion is
known. Distances are computed on demand and memoized per state.
"""
from __future__ import annotations

import enum
import hashlib
import json
import threading
from collections import defaultdict
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

from .formula import (
    AND,
    DEFAULT_WEIGHTS,
    IMPLIES,
    OR,
    Binary,
    ComplexityWeights,
    Connective,
    Formula,
    Not,
    as_formula,
    subformulas,
)
from .rules import (
    DEFAULT_OPTIONS,
    RuleId,
    RuleOptions,
    check_justification,
    generate,
)

_NOT = Connective.NOT

__all__ = [
    "Problem",
    "InvalidProblem",
    "JustificationError",
    "DerivedStep",
    "StepClaim",
    "ProofState",
    "SaturationConfig",
    "Hyperedge",
    "SolutionSpace",
    "Unreachable",
    "EdgeReason",
    "EdgeCheck",
    "relevant_set",
    "saturate",
    "distance",
    "edge_exists",
    "optimal_steps",
]


class InvalidProblem(ValueError):
    pass


class JustificationError(ValueError):
    pass


@dataclass(frozen=True)
class Problem:
    id: str
    premises: tuple[Formula, ...]
    conclusion: Formula
    level: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "premises", tuple(as_formula(p) for p in self.premises))
        object.__setattr__(self, "conclusion", as_formula(self.conclusion))
        if not self.premises:
            raise InvalidProblem(f"problem {self.id!r} has no premises")
        if len(set(self.premises)) != len(self.premises):
            raise InvalidProblem(f"problem {self.id!r} repeats a premise")
        if self.conclusion in self.premises:
            raise InvalidProblem(f"problem {self.id!r}: conclusion is already a premise")
        if self.level is not None and not 1 <= self.level <= 7:
            raise InvalidProblem(f"problem {self.id!r}: level {self.level} outside 1-7")

    @property
    def excluded_level(self) -> bool:
        """Levels 1 and 7 (pre/post-test) carry no hints in the tutor."""
        return self.level in (1, 7)


@dataclass(frozen=True)
class DerivedStep:
    statement: Formula
    rule: RuleId
    parents: tuple[Formula, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "statement", as_formula(self.statement))
        object.__setattr__(self, "rule", RuleId(self.rule))
        object.__setattr__(self, "parents", tuple(as_formula(p) for p in self.parents))


@dataclass(frozen=True)
class StepClaim:
    """A proposed next step: statement, rule, parents, plus free-text fields."""

    statement: Formula
    rule: RuleId | str
    parents: tuple[Formula, ...]
    candidates_text: str | None = None
    reasoning_text: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "statement", as_formula(self.statement))
        try:
            object.__setattr__(self, "rule", RuleId(self.rule))
        except ValueError:
            pass  # unknown rule names are kept verbatim and judged invalid later
        object.__setattr__(self, "parents", tuple(as_formula(p) for p in self.parents))

    def as_step(self) -> DerivedStep:
        return DerivedStep(self.statement, self.rule, self.parents)


@dataclass(frozen=True)
class ProofState:
    problem: Problem
    derived: tuple[DerivedStep, ...] = ()
    id: str | None = None
    solution_context: StepClaim | None = None

    @property
    def known(self) -> tuple[Formula, ...]:
        return self.problem.premises + tuple(d.statement for d in self.derived)

    @property
    def key(self) -> tuple[str, ...]:
        return tuple(sorted(f.text for f in self.known))

    def extend(self, statement: Formula, rule: RuleId, parents: Sequence[Formula]) -> "ProofState":
        step = DerivedStep(statement, rule, tuple(parents))
        return replace(self, derived=self.derived + (step,), id=None, solution_context=None)

    def validate(self, options: RuleOptions = DEFAULT_OPTIONS) -> None:
        """Raise :class:`JustificationError` unless every intermediate is well-founded."""
        seen = list(self.problem.premises)
        seen_set = set(seen)
        for n, step in enumerate(self.derived, start=len(seen) + 1):
            if step.statement in seen_set:
                raise JustificationError(f"({n}) {step.statement} duplicates an earlier statement")
            missing = [p for p in step.parents if p not in seen_set]
            if missing:
                raise JustificationError(f"({n}) {step.statement}: parent {missing[0]} not derived earlier")
            verdict = check_justification(step.rule, step.parents, step.statement, None, options)
            if not verdict:
                raise JustificationError(
                    f"({n}) {step.statement} [{step.rule}]: {verdict.reason.value}"
                )
            seen.append(step.statement)
            seen_set.add(step.statement)


@dataclass(frozen=True)
class SaturationConfig:
    max_statements: int = 5000
    max_complexity: int = 11
    max_depth: int = 12
    rules: RuleOptions = DEFAULT_OPTIONS
    relevant_closure_negation: bool = True
    weights: ComplexityWeights = DEFAULT_WEIGHTS
    # Add/Conj may only introduce statements from the relevant set
    relevant_introductions: bool = True

    def __post_init__(self) -> None:
        if min(self.max_statements, self.max_complexity, self.max_depth) <= 0:
            raise ValueError("saturation caps must be positive")

    @property
    def enabled_rules(self) -> frozenset[RuleId]:
        return self.rules.enabled

    def to_dict(self) -> dict:
        return {
            "max_statements": self.max_statements,
            "max_complexity": self.max_complexity,
            "max_depth": self.max_depth,
            "rules": self.rules.to_dict(),
            "relevant_closure_negation": self.relevant_closure_negation,
            "weights": self.weights.to_dict(),
            "relevant_introductions": self.relevant_introductions,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SaturationConfig":
        return cls(
            max_statements=int(data.get("max_statements", 5000)),
            max_complexity=int(data.get("max_complexity", 11)),
            max_depth=int(data.get("max_depth", 12)),
            rules=RuleOptions.from_dict(data.get("rules", {})),
            relevant_closure_negation=bool(data.get("relevant_closure_negation", True)),
            weights=(ComplexityWeights.from_dict(data["weights"]) if "weights" in data
                     else DEFAULT_WEIGHTS),
            relevant_introductions=bool(data.get("relevant_introductions", True)),
        )

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class Hyperedge:
    result: int
    rule: RuleId
    parents: tuple[int, ...]  # sorted ascending


@dataclass(frozen=True)
class Unreachable:
    """Distance is undefined: ``"proven"`` (conclusion not derivable) or ``"cap"``."""

    reason: str

    @property
    def capped(self) -> bool:
        return self.reason == "cap"


UNREACHABLE_PROVEN = Unreachable("proven")
UNREACHABLE_CAP = Unreachable("cap")


class _Complexity:
    def __init__(self, weights: ComplexityWeights):
        self.w = weights
        self.memo: dict[Formula, int] = {}

    def __call__(self, f: Formula) -> int:
        v = self.memo.get(f)
        if v is None:
            if isinstance(f, Binary):
                v = self.binary(f.connective, f.left, f.right)
            elif isinstance(f, Not):
                nested = isinstance(f.body, Binary)
                v = (self.w.base[_NOT]
                     + (self.w.nest[_NOT] + self.w.paren_unit if nested else 0)
                     + self(f.body))
            else:
                v = 0
            self.memo[f] = v
        return v

    def binary(self, c, left: Formula, right: Formula) -> int:
        parens = isinstance(left, Binary) + isinstance(right, Binary)
        own = self.w.base[c] + (self.w.nest[c] if parens else 0) + parens * self.w.paren_unit
        return own + self(left) + self(right)



def relevant_set(problem: Problem, cfg: SaturationConfig = SaturationConfig()) -> tuple[Formula, ...]:
    """Statements Add may introduce and DN may expand into.

    Subformulas of the premises and conclusion, optionally closed once under
    negation, and limited to the complexity cap.
    """
    cx = _Complexity(cfg.weights)
    subs: dict[Formula, None] = {}
    for f in problem.premises + (problem.conclusion,):
        subs.update(dict.fromkeys(subformulas(f)))
    out = dict(subs)
    if cfg.relevant_closure_negation:
        for f in subs:
            out.setdefault(Not(f), None)
    return tuple(f for f in out if cx(f) <= cfg.max_complexity)


class _CapHit(Exception):
    pass


class _Saturator:
    def __init__(self, premises: Sequence[Formula], cfg: SaturationConfig,
                 candidates: Sequence[Formula]):
        self.cfg = cfg
        self.opts = cfg.rules
        self.candidates = tuple(candidates)
        self.candidate_set = frozenset(candidates)
        self.cx = _Complexity(cfg.weights)
        # relevant binary candidates keyed by operand, for goal-restricted Add/Conj
        self.candidates_by_left: dict[Formula, list[Binary]] = defaultdict(list)
        self.candidates_by_right: dict[Formula, list[Binary]] = defaultdict(list)
        for f in self.candidates:
            if isinstance(f, Binary) and f.connective in (AND, OR):
                self.candidates_by_left[f.left].append(f)
                self.candidates_by_right[f.right].append(f)
        self.statements: list[Formula] = []
        self.index: dict[Formula, int] = {}
        self.edges: list[Hyperedge] = []
        self.edge_keys: set[tuple] = set()
        self.complete = True
        self.processed = 0
        # indexes over processed statements
        self.impl_by_ante: dict[Formula, list[int]] = defaultdict(list)
        self.impl_by_cons: dict[Formula, list[int]] = defaultdict(list)
        self.or_by_left: dict[Formula, list[int]] = defaultdict(list)
        self.or_by_right: dict[Formula, list[int]] = defaultdict(list)
        self.by_cx: dict[int, list[int]] = defaultdict(list)
        for p in premises:
            if p not in self.index:
                self.index[p] = len(self.statements)
                self.statements.append(p)

    def done(self, f: Formula) -> int | None:
        i = self.index.get(f)
        return i if i is not None and i < self.processed else None

    def add(self, result: Formula, rule: RuleId, parents: Iterable[int]) -> None:
        ps = tuple(sorted(parents))
        i = self.index.get(result)
        if i is None:
            if self.cx(result) > self.cfg.max_complexity:
                return
            if len(self.statements) >= self.cfg.max_statements:
                self.complete = False
                raise _CapHit
            i = len(self.statements)
            self.index[result] = i
            self.statements.append(result)
        if i in ps:
            return
        key = (i, rule, ps)
        if key not in self.edge_keys:
            self.edge_keys.add(key)
            self.edges.append(Hyperedge(i, rule, ps))

    def run(self) -> None:
        try:
            while self.processed < len(self.statements):
                i = self.processed
                self.processed += 1
                self._index(i)
                self._combine(i)
        except _CapHit:
            pass

    def _index(self, i: int) -> None:
        f = self.statements[i]
        if isinstance(f, Binary):
            if f.connective is IMPLIES:
                self.impl_by_ante[f.left].append(i)
                self.impl_by_cons[f.right].append(i)
            elif f.connective is OR:
                self.or_by_left[f.left].append(i)
                self.or_by_right[f.right].append(i)
        self.by_cx[self.cx(f)].append(i)

    def _combine(self, i: int) -> None:
        S = self.statements
        x = S[i]
        on = self.opts.enabled
        R = RuleId

        for rule in (R.Simp, R.Impl, R.DN, R.CP, R.Com, R.Assoc, R.Dist, R.Equiv, R.DeM):
            if rule in on:
                for res in generate(rule, [x], self.candidate_set, self.opts):
                    self.add(res, rule, (i,))
        if R.Add in on:
            if self.cfg.relevant_introductions:
                for f in self.candidates_by_left.get(x, ()):
                    if f.connective is OR:
                        self.add(f, R.Add, (i,))
            else:
                for q in self.candidates:
                    if self.cx.binary(OR, x, q) <= self.cfg.max_complexity:
                        self.add(Binary(OR, x, q), R.Add, (i,))

        is_impl = isinstance(x, Binary) and x.connective is IMPLIES
        is_or = isinstance(x, Binary) and x.connective is OR

        if R.MP in on:
            if is_impl and (j := self.done(x.left)) is not None:
                self.add(x.right, R.MP, (i, j))
            for j in list(self.impl_by_ante.get(x, ())):
                self.add(S[j].right, R.MP, (j, i))
        if R.MT in on:
            if is_impl and (j := self.done(Not(x.right))) is not None:
                self.add(Not(x.left), R.MT, (i, j))
            if isinstance(x, Not):
                for j in list(self.impl_by_cons.get(x.body, ())):
                    self.add(Not(S[j].left), R.MT, (j, i))
        if R.DS in on:
            if is_or:
                if (j := self.done(Not(x.left))) is not None:
                    self.add(x.right, R.DS, (i, j))
                if (j := self.done(Not(x.right))) is not None:
                    self.add(x.left, R.DS, (i, j))
            if isinstance(x, Not):
                for j in list(self.or_by_left.get(x.body, ())):
                    self.add(S[j].right, R.DS, (j, i))
                for j in list(self.or_by_right.get(x.body, ())):
                    self.add(S[j].left, R.DS, (j, i))
        if R.HS in on and is_impl:
            for j in list(self.impl_by_ante.get(x.right, ())):
                self.add(Binary(IMPLIES, x.left, S[j].right), R.HS, (i, j))
            for j in list(self.impl_by_cons.get(x.left, ())):
                self.add(Binary(IMPLIES, S[j].left, x.right), R.HS, (j, i))
        if R.CD in on:
            if is_or:
                for a in list(self.impl_by_ante.get(x.left, ())):
                    for b in list(self.impl_by_ante.get(x.right, ())):
                        self.add(Binary(OR, S[a].right, S[b].right), R.CD, (a, b, i))
            if is_impl:
                for k in list(self.or_by_left.get(x.left, ())):
                    for j in list(self.impl_by_ante.get(S[k].right, ())):
                        self.add(Binary(OR, x.right, S[j].right), R.CD, (i, j, k))
                for k in list(self.or_by_right.get(x.left, ())):
                    for j in list(self.impl_by_ante.get(S[k].left, ())):
                        self.add(Binary(OR, S[j].right, x.right), R.CD, (j, i, k))
        if R.Conj in on and self.cfg.relevant_introductions:
            for f in self.candidates_by_left.get(x, ()):
                if f.connective is AND and (j := self.done(f.right)) is not None:
                    if j != i or self.opts.conj_self:
                        self.add(f, R.Conj, (i, j))
            for f in self.candidates_by_right.get(x, ()):
                if f.connective is AND and (j := self.done(f.left)) is not None:
                    if j != i:
                        self.add(f, R.Conj, (i, j))
        elif R.Conj in on:
            w = self.cfg.weights
            budget = self.cfg.max_complexity - self.cx(x) - w.base[AND]
            for c in sorted(self.by_cx):
                if c > budget:
                    break
                for j in list(self.by_cx[c]):
                    if j == i and not self.opts.conj_self:
                        continue
                    y = S[j]
                    if self.cx.binary(AND, x, y) <= self.cfg.max_complexity:
                        self.add(Binary(AND, x, y), R.Conj, (i, j))
                        self.add(Binary(AND, y, x), R.Conj, (i, j))


class SolutionSpace:
    """Saturated derivation hypergraph of one problem plus a distance cache.

    Treat as immutable once built; ``distance`` may be called from several
    threads.
    """

    def __init__(
        self,
        problem: Problem,
        config: SaturationConfig,
        statements: Sequence[Formula],
        derivations: Sequence[Hyperedge],
        saturation_complete: bool,
        candidates: Sequence[Formula],
    ):
        self.problem = problem
        self.config = config
        self.statements: tuple[Formula, ...] = tuple(statements)
        self.derivations: tuple[Hyperedge, ...] = tuple(derivations)
        self.saturation_complete = saturation_complete
        self.candidates: tuple[Formula, ...] = tuple(candidates)
        self.index: dict[Formula, int] = {f: i for i, f in enumerate(self.statements)}
        producers: dict[int, list[Hyperedge]] = defaultdict(list)
        for e in self.derivations:
            producers[e.result].append(e)
        self.producers = dict(producers)
        self.distance_cache: dict[tuple[str, ...], int | Unreachable] = {}
        self._lock = threading.Lock()
        self._local_spaces: dict[tuple[str, ...], SolutionSpace] = {}

    def __repr__(self) -> str:
        return (f"SolutionSpace({self.problem.id!r}, statements={len(self.statements)}, "
                f"derivations={len(self.derivations)}, complete={self.saturation_complete})")

    def __contains__(self, f: Formula) -> bool:
        return f in self.index

    def edges_for(self, statement: Formula) -> list[tuple[RuleId, tuple[Formula, ...]]]:
        i = self.index.get(statement)
        if i is None:
            return []
        return [(e.rule, tuple(self.statements[p] for p in e.parents))
                for e in self.producers.get(i, [])]

    def has_edge(self, statement: Formula, rule: RuleId, parents: Iterable[Formula]) -> bool:
        want = sorted(self.index.get(p, -1) for p in parents)
        return any(r == rule and list(ps) == want
                   for r, ps in ((e.rule, e.parents)
                                 for e in self.producers.get(self.index.get(statement, -1), [])))

    # -- distance ---------------------------------------------------------

    def distance_of(self, known: Iterable[Formula]) -> int | Unreachable:
        known = tuple(dict.fromkeys(known))
        goal = self.problem.conclusion
        if goal in known:
            return 0
        key = tuple(sorted(f.text for f in known))
        with self._lock:
            hit = self.distance_cache.get(key)
        if hit is not None:
            return hit
        if all(f in self.index for f in known):
            value = _min_derivation(self, frozenset(self.index[f] for f in known))
        else:
            value = self._local_space(known).distance_of(known)
        with self._lock:
            self.distance_cache.setdefault(key, value)
            return self.distance_cache[key]

    def _local_space(self, known: Sequence[Formula], extra: Sequence[Formula] = ()) -> "SolutionSpace":
        """Re-saturate from ``known`` when a state leaves the stored space."""
        outside = [f for f in list(known) + list(extra) if f not in self.index]
        key = tuple(sorted(f.text for f in known)) + ("|",) + tuple(sorted(f.text for f in outside))
        with self._lock:
            cached = self._local_spaces.get(key)
        if cached is not None:
            return cached
        cx = _Complexity(self.config.weights)
        cap = max([self.config.max_complexity] + [cx(f) for f in outside])
        cfg = replace(self.config, max_complexity=cap)
        cands = dict.fromkeys(self.candidates)
        for f in outside:
            cands.update(dict.fromkeys(subformulas(f)))
        premises = tuple(dict.fromkeys(known))
        local_problem = Problem(self.problem.id + "#local", premises, self.problem.conclusion,
                                self.problem.level)
        space = saturate(local_problem, cfg, candidates=tuple(cands))
        with self._lock:
            self._local_spaces.setdefault(key, space)
        return space


def _reach(space: SolutionSpace, known: frozenset[int]) -> tuple[dict[int, int], dict[int, Hyperedge]]:
    """Forward closure from ``known``: level (h_max) and first deriving edge per statement."""
    level = {k: 0 for k in known}
    first: dict[int, Hyperedge] = {}
    waiting: dict[int, list[tuple[Hyperedge, list[int]]]] = defaultdict(list)
    missing: dict[int, int] = {}
    frontier = list(known)
    for n, e in enumerate(space.derivations):
        need = {p for p in e.parents if p not in known}
        if not need:
            if e.result not in level:
                level[e.result] = 1
                first[e.result] = e
                frontier.append(e.result)
            continue
        missing[n] = len(need)
        for p in need:
            waiting[p].append((e, n))
    # propagate in order of level so levels are minimal
    current = sorted((i for i in level if level[i] == 1))
    depth = 1
    while current:
        nxt: list[int] = []
        for i in current:
            for e, n in waiting.get(i, ()):
                missing[n] -= 1
                if missing[n] == 0 and e.result not in level:
                    level[e.result] = depth + 1
                    first[e.result] = e
                    nxt.append(e.result)
        depth += 1
        current = nxt
    return level, first


def _min_derivation(space: SolutionSpace, known: frozenset[int]) -> int | Unreachable:
    goal = space.index.get(space.problem.conclusion)
    if goal is None:
        return UNREACHABLE_PROVEN if space.saturation_complete else UNREACHABLE_CAP
    if goal in known:
        return 0
    level, first = _reach(space, known)
    if goal not in level:
        return UNREACHABLE_PROVEN if space.saturation_complete else UNREACHABLE_CAP

    # upper bound: the support of the first-found derivation
    support: set[int] = set()
    stack = [goal]
    while stack:
        s = stack.pop()
        if s in known or s in support:
            continue
        support.add(s)
        stack.extend(first[s].parents)
    upper = len(support)
    max_depth = space.config.max_depth

    viable: dict[int, list[tuple[int, ...]]] = {}

    def producers(g: int) -> list[tuple[int, ...]]:
        """Distinct unknown-parent sets that derive ``g``, minus dominated ones.

        A producer whose unknown parents are a superset of another's can never
        do better, so only the subset-minimal sets are kept.
        """
        got = viable.get(g)
        if got is None:
            sets = {}
            for e in space.producers.get(g, ()):
                if g in e.parents or not all(p in level for p in e.parents):
                    continue
                need = frozenset(p for p in e.parents if p not in known)
                sets.setdefault(need, None)
            ordered = sorted(sets, key=lambda n: (len(n), sum(level[p] for p in n), sorted(n)))
            got = []
            for n in ordered:
                if not any(prev <= n for prev in got):
                    got.append(n)
            got = [tuple(sorted(n)) for n in got]
            viable[g] = got
        return got

    # Each chosen statement commits to one producer; committed producers must
    # stay acyclic. Any well-founded derivation has such an acyclic choice,
    # so the restriction loses nothing.
    failed: dict[tuple, int] = {}

    def above(edges: dict[int, tuple[int, ...]], q: int) -> frozenset[int]:
        """Chosen statements whose committed derivation depends on ``q``."""
        out: set[int] = set()
        frontier = [q]
        while frontier:
            x = frontier.pop()
            for s, need in edges.items():
                if x in need and s not in out:
                    out.add(s)
                    frontier.append(s)
        return frozenset(out)

    def search(chosen: frozenset[int], open_: frozenset[int],
               edges: dict[int, tuple[int, ...]], bound: int) -> bool:
        if not open_:
            return True
        ups = {q: above(edges, q) for q in open_}
        state = (chosen, frozenset(ups.items()))
        if failed.get(state, -1) >= bound:
            return False
        # statements below an open goal cannot sit above it
        for q in open_:
            if level[q] - 1 - (len(chosen) - len(ups[q]) - 1) > bound - len(chosen):
                failed[state] = bound
                return False
        g = min(open_, key=lambda s: (len(producers(s)), s))
        rest = open_ - {g}
        for need in producers(g):
            if any(p in ups[g] for p in need):
                continue
            new = frozenset(p for p in need if p not in chosen)
            if len(chosen) + len(new) > bound:
                continue
            edges[g] = need
            found = search(chosen | new, rest | new, edges, bound)
            del edges[g]
            if found:
                return True
        failed[state] = bound
        return False

    start = frozenset({goal})
    for bound in range(max(1, level[goal]), min(upper, max_depth + 1)):
        if search(start, start, {}, bound):
            return bound
    if upper > max_depth:
        return UNREACHABLE_CAP
    return upper


def saturate(
    problem: Problem,
    cfg: SaturationConfig = SaturationConfig(),
    *,
    candidates: Sequence[Formula] | None = None,
) -> SolutionSpace:
    """Forward-chain every enabled rule to a fixpoint under the configured caps.

    Statements are processed in discovery order, so shallow derivations are
    recorded before deep ones and the result is deterministic. When the
    statement cap trips, saturation stops and ``saturation_complete`` is False.
    """
    if not isinstance(problem, Problem):
        raise InvalidProblem(f"expected a Problem, got {type(problem).__name__}")
    cands = relevant_set(problem, cfg) if candidates is None else tuple(candidates)
    sat = _Saturator(problem.premises, cfg, cands)
    sat.run()
    return SolutionSpace(problem, cfg, sat.statements, sat.edges, sat.complete, cands)


def distance(space: SolutionSpace, state: ProofState) -> int | Unreachable:
    """Minimum number of single-statement derivations until the conclusion is known."""
    if state.problem.conclusion != space.problem.conclusion or not set(
        space.problem.premises
    ) <= set(state.known):
        raise ValueError("proof state does not belong to this solution space")
    return space.distance_of(state.known)


class EdgeReason(str, enum.Enum):
    OK = "Ok"
    UNKNOWN_PARENT = "UnknownParent"
    REDUNDANT = "Redundant"
    BAD_JUSTIFICATION = "BadJustification"


@dataclass(frozen=True)
class EdgeCheck:
    ok: bool
    reason: EdgeReason
    detail: str = ""

    def __bool__(self) -> bool:
        return self.ok


def edge_exists(space: SolutionSpace, state: ProofState, claim: StepClaim) -> EdgeCheck:
    """Is ``claim`` a single valid step from ``state``?

    Parents must already be known, the statement must be new, and the rule
    must justify it from exactly those parents.
    """
    known = set(state.known)
    for p in claim.parents:
        if p not in known:
            return EdgeCheck(False, EdgeReason.UNKNOWN_PARENT, f"{p} is not among the known statements")
    if claim.statement in known:
        return EdgeCheck(False, EdgeReason.REDUNDANT, f"{claim.statement} is already known")
    if not isinstance(claim.rule, RuleId):
        return EdgeCheck(False, EdgeReason.BAD_JUSTIFICATION, f"unknown rule {claim.rule!r}")
    verdict = check_justification(claim.rule, claim.parents, claim.statement, None,
                                  space.config.rules)
    if not verdict:
        return EdgeCheck(False, EdgeReason.BAD_JUSTIFICATION, verdict.reason.value)
    return EdgeCheck(True, EdgeReason.OK)


def optimal_steps(space: SolutionSpace, state: ProofState, limit: int | None = None) -> list[StepClaim]:
    """Steps from ``state`` that reduce its distance by one, in statement order."""
    d = distance(space, state)
    if not isinstance(d, int) or d == 0:
        return []
    if not all(f in space.index for f in state.known):
        space = space._local_space(state.known)
    known_idx = {space.index[f] for f in state.known}
    out: list[StepClaim] = []
    seen: set[int] = set()
    for e in space.derivations:
        if e.result in known_idx or e.result in seen:
            continue
        if not all(p in known_idx for p in e.parents):
            continue
        after = space.distance_of(tuple(state.known) + (space.statements[e.result],))
        if isinstance(after, int) and after == d - 1:
            seen.add(e.result)
            out.append(StepClaim(space.statements[e.result], e.rule,
                                 tuple(space.statements[p] for p in e.parents)))
            if limit is not None and len(out) >= limit:
                break
    return out
