"""Inference and replacement rules of the logic tutor.

Every rule is usable two ways: forward (``apply_forward`` enumerates what a
rule yields from given parents) and as a checker (``check_justification``
decides whether a claimed statement is justified by a rule and parents).
The checker is defined through the generator so the two cannot disagree.

Deductive rules match whole statements only. Replacement rules are
equivalences; they rewrite one subformula occurrence per application, in
either direction.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Callable, Collection, Iterable, Iterator, Sequence

from .formula import (
    AND,
    IFF,
    IMPLIES,
    OR,
    Binary,
    Formula,
    Not,
    atoms,
    evaluate,
    subformulas,
    truth_table_rows,
)

__all__ = [
    "RuleId",
    "RuleKind",
    "RuleOptions",
    "ArityMismatch",
    "TooManyAtoms",
    "Invalid",
    "InvalidReason",
    "VALID",
    "RULE_ARITY",
    "RULE_NAMES",
    "apply_forward",
    "generate",
    "check_justification",
    "soundness_oracle",
    "parse_rule_id",
    "rewrite_at_root",
]


class RuleId(str, enum.Enum):
    MP = "MP"
    MT = "MT"
    Conj = "Conj"
    Simp = "Simp"
    Add = "Add"
    DS = "DS"
    HS = "HS"
    Impl = "Impl"
    DN = "DN"
    CP = "CP"
    Com = "Com"
    Assoc = "Assoc"
    Dist = "Dist"
    CD = "CD"
    Equiv = "Equiv"
    DeM = "DeM"

    def __str__(self) -> str:
        return self.value

    @property
    def kind(self) -> "RuleKind":
        return RuleKind.DEDUCTIVE if self in _DEDUCTIVE else RuleKind.REPLACEMENT

    @property
    def arity(self) -> int:
        return RULE_ARITY[self]

    @property
    def full_name(self) -> str:
        return RULE_NAMES[self]


class RuleKind(enum.Enum):
    DEDUCTIVE = "deductive"
    REPLACEMENT = "replacement"


_DEDUCTIVE = frozenset(
    {RuleId.MP, RuleId.MT, RuleId.Conj, RuleId.Simp, RuleId.Add, RuleId.DS, RuleId.HS, RuleId.CD}
)

RULE_ARITY: dict[RuleId, int] = {
    RuleId.MP: 2,
    RuleId.MT: 2,
    RuleId.DS: 2,
    RuleId.HS: 2,
    RuleId.Conj: 2,
    RuleId.Simp: 1,
    RuleId.Add: 1,
    RuleId.CD: 3,
    **{r: 1 for r in (RuleId.Impl, RuleId.DN, RuleId.CP, RuleId.Com, RuleId.Assoc,
                      RuleId.Dist, RuleId.Equiv, RuleId.DeM)},
}

RULE_NAMES: dict[RuleId, str] = {
    RuleId.MP: "Modus Ponens",
    RuleId.MT: "Modus Tollens",
    RuleId.Conj: "Conjunction",
    RuleId.Simp: "Simplification",
    RuleId.Add: "Addition",
    RuleId.DS: "Disjunctive Syllogism",
    RuleId.HS: "Hypothetical Syllogism",
    RuleId.Impl: "Implication",
    RuleId.DN: "Double Negation",
    RuleId.CP: "Contraposition",
    RuleId.Com: "Commutation",
    RuleId.Assoc: "Associativity",
    RuleId.Dist: "Distribution",
    RuleId.CD: "Constructive Dilemma",
    RuleId.Equiv: "Equivalence",
    RuleId.DeM: "De Morgan's Law",
}

# spellings models actually produce, lower-cased
_RULE_ALIASES: dict[str, RuleId] = {}
for _r in RuleId:
    _RULE_ALIASES[_r.value.lower()] = _r
    _RULE_ALIASES[RULE_NAMES[_r].lower()] = _r
_RULE_ALIASES.update({
    "de morgan": RuleId.DeM,
    "de morgan's": RuleId.DeM,
    "demorgan": RuleId.DeM,
    "de morgan's law": RuleId.DeM,
    "commutative": RuleId.Com,
    "commutativity": RuleId.Com,
    "associative": RuleId.Assoc,
    "contrapositive": RuleId.CP,
    "double negation": RuleId.DN,
    "material implication": RuleId.Impl,
    "conjunction": RuleId.Conj,
    "simplification": RuleId.Simp,
    "addition": RuleId.Add,
})


def parse_rule_id(text: str) -> RuleId:
    """Map a rule spelling (short name, full name, common variants) to a RuleId."""
    key = text.strip().strip(".").strip()
    if key.endswith(")") and "(" in key:
        # "Modus Tollens (MT)"
        inner = key[key.rindex("(") + 1:-1]
        if inner.strip().lower() in _RULE_ALIASES:
            return _RULE_ALIASES[inner.strip().lower()]
        key = key[:key.rindex("(")].strip()
    lowered = " ".join(key.lower().replace("rule", "").split())
    if lowered in _RULE_ALIASES:
        return _RULE_ALIASES[lowered]
    raise ValueError(f"unknown inference rule {text!r}")


@dataclass(frozen=True)
class RuleOptions:
    """Switches for conventions the rule table leaves open."""

    enabled: frozenset[RuleId] = frozenset(RuleId)
    com_assoc_and: bool = True
    dist_dual: bool = False
    conj_self: bool = False

    @classmethod
    def literal_fifteen(cls) -> "RuleOptions":
        return cls(enabled=frozenset(RuleId) - {RuleId.DeM})

    def to_dict(self) -> dict:
        return {
            "enabled": sorted(r.value for r in self.enabled),
            "com_assoc_and": self.com_assoc_and,
            "dist_dual": self.dist_dual,
            "conj_self": self.conj_self,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RuleOptions":
        return cls(
            enabled=frozenset(RuleId(r) for r in data.get("enabled", [r.value for r in RuleId])),
            com_assoc_and=bool(data.get("com_assoc_and", True)),
            dist_dual=bool(data.get("dist_dual", False)),
            conj_self=bool(data.get("conj_self", False)),
        )


DEFAULT_OPTIONS = RuleOptions()


class ArityMismatch(ValueError):
    def __init__(self, rule: RuleId, got: int):
        super().__init__(f"{rule.value} takes {RULE_ARITY[rule]} parent(s), got {got}")
        self.rule = rule
        self.got = got


class TooManyAtoms(ValueError):
    pass


# ---------------------------------------------------------------------------
# Replacement rules: rewrites at the root of a single subformula


def _rewrite_impl(f: Formula, cands, opts) -> Iterator[Formula]:
    match f:
        case Binary(connective=c, left=p, right=q) if c is IMPLIES:
            yield Binary(OR, Not(p), q)
        case Binary(connective=c, left=Not(body=p), right=q) if c is OR:
            yield Binary(IMPLIES, p, q)


def _rewrite_dn(f: Formula, cands, opts) -> Iterator[Formula]:
    if isinstance(f, Not) and isinstance(f.body, Not):
        yield f.body.body
    expanded = Not(Not(f))
    if cands is None or expanded in cands:
        yield expanded


def _rewrite_cp(f: Formula, cands, opts) -> Iterator[Formula]:
    match f:
        case Binary(connective=c, left=p, right=q) if c is IMPLIES:
            yield Binary(IMPLIES, Not(q), Not(p))
            if isinstance(p, Not) and isinstance(q, Not):
                yield Binary(IMPLIES, q.body, p.body)


def _rewrite_com(f: Formula, cands, opts) -> Iterator[Formula]:
    match f:
        case Binary(connective=c, left=p, right=q) if c is OR or (c is AND and opts.com_assoc_and):
            yield Binary(c, q, p)


def _rewrite_assoc(f: Formula, cands, opts) -> Iterator[Formula]:
    match f:
        case Binary(connective=c, left=Binary(connective=c2, left=p, right=q), right=r) if (
            c is c2 and (c is OR or (c is AND and opts.com_assoc_and))
        ):
            yield Binary(c, p, Binary(c, q, r))
    match f:
        case Binary(connective=c, left=p, right=Binary(connective=c2, left=q, right=r)) if (
            c is c2 and (c is OR or (c is AND and opts.com_assoc_and))
        ):
            yield Binary(c, Binary(c, p, q), r)


def _rewrite_dist(f: Formula, cands, opts) -> Iterator[Formula]:
    # P ∧ (Q ∨ R)  ≡  (P ∧ Q) ∨ (P ∧ R), and optionally the dual with ∧/∨ swapped
    pairs = [(AND, OR)]
    if opts.dist_dual:
        pairs.append((OR, AND))
    for outer, inner in pairs:
        match f:
            case Binary(connective=c, left=p, right=Binary(connective=c2, left=q, right=r)) if (
                c is outer and c2 is inner
            ):
                yield Binary(inner, Binary(outer, p, q), Binary(outer, p, r))
        match f:
            case Binary(
                connective=c,
                left=Binary(connective=c1, left=p1, right=q),
                right=Binary(connective=c2, left=p2, right=r),
            ) if c is inner and c1 is outer and c2 is outer and p1 == p2:
                yield Binary(outer, p1, Binary(inner, q, r))


def _rewrite_equiv(f: Formula, cands, opts) -> Iterator[Formula]:
    match f:
        case Binary(connective=c, left=p, right=q) if c is IFF:
            yield Binary(AND, Binary(IMPLIES, p, q), Binary(IMPLIES, q, p))
        case Binary(
            connective=c,
            left=Binary(connective=c1, left=p1, right=q1),
            right=Binary(connective=c2, left=q2, right=p2),
        ) if c is AND and c1 is IMPLIES and c2 is IMPLIES and p1 == p2 and q1 == q2:
            yield Binary(IFF, p1, q1)


def _rewrite_dem(f: Formula, cands, opts) -> Iterator[Formula]:
    match f:
        case Not(body=Binary(connective=c, left=p, right=q)) if c is AND or c is OR:
            yield Binary(OR if c is AND else AND, Not(p), Not(q))
        case Binary(connective=c, left=Not(body=p), right=Not(body=q)) if c is AND or c is OR:
            yield Not(Binary(OR if c is AND else AND, p, q))


_REWRITERS: dict[RuleId, Callable[..., Iterator[Formula]]] = {
    RuleId.Impl: _rewrite_impl,
    RuleId.DN: _rewrite_dn,
    RuleId.CP: _rewrite_cp,
    RuleId.Com: _rewrite_com,
    RuleId.Assoc: _rewrite_assoc,
    RuleId.Dist: _rewrite_dist,
    RuleId.Equiv: _rewrite_equiv,
    RuleId.DeM: _rewrite_dem,
}


def rewrite_at_root(
    rule: RuleId,
    f: Formula,
    candidates: Collection[Formula] | None = None,
    options: RuleOptions = DEFAULT_OPTIONS,
) -> list[Formula]:
    """All one-step rewrites of ``f`` itself (not its subformulas) under ``rule``."""
    return list(dict.fromkeys(_REWRITERS[rule](f, candidates, options)))


def _rewrite_everywhere(
    f: Formula, fn: Callable[[Formula], Iterable[Formula]]
) -> Iterator[Formula]:
    """Apply ``fn`` at each single occurrence, rebuilding the enclosing formula."""
    yield from fn(f)
    match f:
        case Not(body=body):
            for new in _rewrite_everywhere(body, fn):
                yield Not(new)
        case Binary(connective=c, left=left, right=right):
            for new in _rewrite_everywhere(left, fn):
                yield Binary(c, new, right)
            for new in _rewrite_everywhere(right, fn):
                yield Binary(c, left, new)


# ---------------------------------------------------------------------------
# Deductive rules, on parents in one fixed role order


def _mp(ps):
    imp, ante = ps
    if isinstance(imp, Binary) and imp.connective is IMPLIES and imp.left == ante:
        yield imp.right


def _mt(ps):
    imp, neg = ps
    if (isinstance(imp, Binary) and imp.connective is IMPLIES and isinstance(neg, Not)
            and neg.body == imp.right):
        yield Not(imp.left)


def _ds(ps):
    disj, neg = ps
    if isinstance(disj, Binary) and disj.connective is OR and isinstance(neg, Not):
        if neg.body == disj.left:
            yield disj.right
        if neg.body == disj.right:
            yield disj.left


def _hs(ps):
    first, second = ps
    if (isinstance(first, Binary) and first.connective is IMPLIES
            and isinstance(second, Binary) and second.connective is IMPLIES
            and first.right == second.left):
        yield Binary(IMPLIES, first.left, second.right)


def _cd(ps):
    i1, i2, disj = ps
    if (isinstance(i1, Binary) and i1.connective is IMPLIES
            and isinstance(i2, Binary) and i2.connective is IMPLIES
            and isinstance(disj, Binary) and disj.connective is OR
            and disj.left == i1.left and disj.right == i2.left):
        yield Binary(OR, i1.right, i2.right)


_ORDERED_DEDUCTIVE = {
    RuleId.MP: _mp,
    RuleId.MT: _mt,
    RuleId.DS: _ds,
    RuleId.HS: _hs,
    RuleId.CD: _cd,
}


def generate(
    rule: RuleId,
    parents: Sequence[Formula],
    candidates: Collection[Formula] | None = None,
    options: RuleOptions = DEFAULT_OPTIONS,
) -> list[Formula]:
    """Like :func:`apply_forward` but returns a deterministically ordered list.

    ``candidates`` bounds the two rules that can grow statements without
    limit: Add introduces only disjuncts from ``candidates`` (nothing when it
    is ``None``), and DN expansion only produces ``¬¬X`` when ``¬¬X`` is a
    candidate (unbounded when ``None``).
    """
    rule = RuleId(rule)
    if len(parents) != RULE_ARITY[rule]:
        raise ArityMismatch(rule, len(parents))
    if rule not in options.enabled:
        return []
    out: list[Formula] = []
    if rule in _REWRITERS:
        (p,) = parents
        out.extend(_rewrite_everywhere(p, lambda g: _REWRITERS[rule](g, candidates, options)))
    elif rule is RuleId.Simp:
        (p,) = parents
        if isinstance(p, Binary) and p.connective is AND:
            out.extend((p.left, p.right))
    elif rule is RuleId.Add:
        (p,) = parents
        if candidates is not None:
            out.extend(Binary(OR, p, q) for q in sorted(candidates))
    elif rule is RuleId.Conj:
        a, b = parents
        if a != b or options.conj_self:
            out.extend((Binary(AND, a, b), Binary(AND, b, a)))
    else:
        fn = _ORDERED_DEDUCTIVE[rule]
        for perm in dict.fromkeys(itertools.permutations(parents)):
            out.extend(fn(perm))
    return list(dict.fromkeys(out))


def apply_forward(
    rule: RuleId,
    parents: Sequence[Formula],
    candidates: Collection[Formula] | None = None,
    options: RuleOptions = DEFAULT_OPTIONS,
) -> set[Formula]:
    """Every statement derivable from exactly ``parents`` by one application of ``rule``.

    Parent order is not significant. An empty set means the pattern does not
    match; a wrong number of parents raises :class:`ArityMismatch`.
    """
    return set(generate(rule, parents, candidates, options))


class InvalidReason(str, enum.Enum):
    PATTERN_MISMATCH = "PatternMismatch"
    ARITY_MISMATCH = "ArityMismatch"
    RESULT_MISMATCH = "ResultMismatch"


@dataclass(frozen=True)
class Invalid:
    reason: InvalidReason

    def __bool__(self) -> bool:
        return False


@dataclass(frozen=True)
class _Valid:
    def __bool__(self) -> bool:
        return True

    def __repr__(self) -> str:
        return "VALID"


VALID = _Valid()


def check_justification(
    rule: RuleId,
    parents: Sequence[Formula],
    claimed: Formula,
    candidates: Collection[Formula] | None = None,
    options: RuleOptions = DEFAULT_OPTIONS,
) -> _Valid | Invalid:
    """Decide whether ``claimed`` follows from ``parents`` by one use of ``rule``.

    With ``candidates=None`` the generative bounds are lifted: any disjunct
    may be added and any double negation introduced, since every such result
    carries the introduced material as a subformula of ``claimed``.

    Returns ``VALID`` (truthy) or an :class:`Invalid` (falsy) with a reason:
    ``PatternMismatch`` when the rule yields nothing from these parents,
    ``ResultMismatch`` when it yields something else.
    """
    try:
        rule = RuleId(rule)
    except ValueError:
        return Invalid(InvalidReason.PATTERN_MISMATCH)
    if len(parents) != RULE_ARITY[rule]:
        return Invalid(InvalidReason.ARITY_MISMATCH)
    bound = candidates if candidates is not None else set(subformulas(claimed))
    results = apply_forward(rule, parents, bound, options)
    if claimed in results:
        return VALID
    if results:
        return Invalid(InvalidReason.RESULT_MISMATCH)
    return Invalid(InvalidReason.PATTERN_MISMATCH)


def soundness_oracle(
    rule: RuleId,
    parents: Sequence[Formula],
    derived: Formula,
    max_atoms: int = 12,
) -> bool:
    """Truth-table check that ``parents`` entail ``derived``.

    For replacement rules the single parent must also be equivalent to
    ``derived``.
    """
    names = atoms(*parents, derived)
    if len(names) > max_atoms:
        raise TooManyAtoms(f"{len(names)} atoms exceeds the limit of {max_atoms}")
    rule = RuleId(rule)
    equivalence = rule.kind is RuleKind.REPLACEMENT
    for row in truth_table_rows(names):
        premises_hold = all(evaluate(p, row) for p in parents)
        conclusion = evaluate(derived, row)
        if premises_hold and not conclusion:
            return False
        if equivalence and conclusion and not premises_hold:
            return False
    return True

