"""Propositional formulas: AST, parser, canonical printer, evaluation, complexity.

Atoms are single uppercase letters. Binary connectives are ``And``, ``Or``,
``Implies`` and ``Iff``; negation is unary. The canonical printer is injective,
so the printed text doubles as the statement identity used by every other
module (hashing and equality go through it).

Accepted input spellings::

    not      ¬  ~  -  !
    and      ∧  &  *
    or       ∨  |
    implies  →  ->  >
    iff      ↔  <->

Precedence (tightest first): ¬, ∧, ∨, →, ↔.  ∧ and ∨ associate to the left,
→ and ↔ to the right.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Union

__all__ = [
    "Connective",
    "Formula",
    "Atom",
    "Not",
    "Binary",
    "ParseError",
    "FormulaSyntaxError",
    "UnknownToken",
    "MissingAtom",
    "ComplexityWeights",
    "DEFAULT_WEIGHTS",
    "parse",
    "to_text",
    "evaluate",
    "atoms",
    "subformulas",
    "complexity",
    "is_binary",
    "truth_table_rows",
]


class Connective(enum.Enum):
    NOT = "¬"
    AND = "∧"
    OR = "∨"
    IMPLIES = "→"
    IFF = "↔"

    @property
    def symbol(self) -> str:
        return self.value


AND, OR, IMPLIES, IFF = Connective.AND, Connective.OR, Connective.IMPLIES, Connective.IFF


class Formula:
    """Base class of the immutable formula AST.

    Equality and hashing use the canonical text, which is computed once at
    construction.
    """

    __slots__ = ()
    text: str

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if not isinstance(other, Formula):
            return NotImplemented
        return self.text == other.text

    def __hash__(self) -> int:
        return hash(self.text)

    def __lt__(self, other: "Formula") -> bool:
        return self.text < other.text

    def __str__(self) -> str:
        return self.text


@dataclass(frozen=True, eq=False)
class Atom(Formula):
    name: str
    text: str = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if len(self.name) != 1 or not ("A" <= self.name <= "Z"):
            raise ValueError(f"atom names are single uppercase letters, got {self.name!r}")
        object.__setattr__(self, "text", self.name)

    __hash__ = Formula.__hash__


@dataclass(frozen=True, eq=False)
class Not(Formula):
    body: Formula
    text: str = field(init=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "text", "¬" + self.body.text)

    __hash__ = Formula.__hash__


@dataclass(frozen=True, eq=False)
class Binary(Formula):
    connective: Connective
    left: Formula
    right: Formula
    text: str = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.connective is Connective.NOT:
            raise ValueError("NOT is unary; use Not(...)")
        object.__setattr__(
            self, "text", f"({self.left.text} {self.connective.symbol} {self.right.text})"
        )

    __hash__ = Formula.__hash__


def is_binary(f: Formula) -> bool:
    return isinstance(f, Binary)


def And(left: Formula, right: Formula) -> Binary:
    return Binary(AND, left, right)


def Or(left: Formula, right: Formula) -> Binary:
    return Binary(OR, left, right)


def Implies(left: Formula, right: Formula) -> Binary:
    return Binary(IMPLIES, left, right)


def Iff(left: Formula, right: Formula) -> Binary:
    return Binary(IFF, left, right)


def to_text(f: Formula) -> str:
    """Canonical rendering: every binary subformula parenthesized, Unicode connectives."""
    return f.text


# ---------------------------------------------------------------------------
# Parsing


class ParseError(ValueError):
    """Base class for formula parse failures."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class FormulaSyntaxError(ParseError):
    def __init__(self, position: int, expected: str, found: str | None = None):
        what = "end of input" if found is None else repr(found)
        super().__init__(f"expected {expected}, found {what}", position)
        self.expected = expected
        self.found = found


class UnknownToken(ParseError):
    def __init__(self, position: int, char: str):
        super().__init__(f"unknown token {char!r}", position)
        self.char = char


# longest spellings first so "->" wins over "-" and "<->" over everything
_TOKEN_SPELLINGS: list[tuple[str, str]] = [
    ("<->", "IFF"),
    ("->", "IMPLIES"),
    ("↔", "IFF"),
    ("→", "IMPLIES"),
    (">", "IMPLIES"),
    ("∨", "OR"),
    ("|", "OR"),
    ("∧", "AND"),
    ("&", "AND"),
    ("*", "AND"),
    ("¬", "NOT"),
    ("~", "NOT"),
    ("-", "NOT"),
    ("!", "NOT"),
    ("(", "LPAREN"),
    (")", "RPAREN"),
]

_BINARY_BY_KIND = {"AND": AND, "OR": OR, "IMPLIES": IMPLIES, "IFF": IFF}


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens: list[tuple[str, str, int]] = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if "A" <= ch <= "Z":
            tokens.append(("ATOM", ch, i))
            i += 1
            continue
        for spelling, kind in _TOKEN_SPELLINGS:
            if text.startswith(spelling, i):
                tokens.append((kind, spelling, i))
                i += len(spelling)
                break
        else:
            raise UnknownToken(i, ch)
    return tokens


class _Parser:
    # precedence climbing, loosest level first
    _LEVELS = ("IFF", "IMPLIES", "OR", "AND")
    _RIGHT_ASSOC = {"IFF", "IMPLIES"}

    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> tuple[str, str, int] | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def _where(self) -> int:
        tok = self.peek()
        return tok[2] if tok else len(self.text)

    def expect(self, kind: str, expected: str) -> None:
        tok = self.peek()
        if tok is None or tok[0] != kind:
            raise FormulaSyntaxError(self._where(), expected, tok[1] if tok else None)
        self.pos += 1

    def parse(self) -> Formula:
        result = self.level(0)
        tok = self.peek()
        if tok is not None:
            raise FormulaSyntaxError(tok[2], "end of input or a connective", tok[1])
        return result

    def level(self, depth: int) -> Formula:
        if depth == len(self._LEVELS):
            return self.unary()
        kind = self._LEVELS[depth]
        left = self.level(depth + 1)
        if kind in self._RIGHT_ASSOC:
            tok = self.peek()
            if tok is not None and tok[0] == kind:
                self.pos += 1
                right = self.level(depth)
                return Binary(_BINARY_BY_KIND[kind], left, right)
            return left
        while (tok := self.peek()) is not None and tok[0] == kind:
            self.pos += 1
            right = self.level(depth + 1)
            left = Binary(_BINARY_BY_KIND[kind], left, right)
        return left

    def unary(self) -> Formula:
        tok = self.peek()
        if tok is None:
            raise FormulaSyntaxError(len(self.text), "an atom, negation or '('")
        kind, spelling, where = tok
        if kind == "NOT":
            self.pos += 1
            return Not(self.unary())
        if kind == "ATOM":
            self.pos += 1
            return Atom(spelling)
        if kind == "LPAREN":
            self.pos += 1
            inner = self.level(0)
            self.expect("RPAREN", "')'")
            return inner
        raise FormulaSyntaxError(where, "an atom, negation or '('", spelling)


def parse(text: str) -> Formula:
    """Parse ``text`` into a formula, accepting every alias spelling."""
    if not text or not text.strip():
        raise FormulaSyntaxError(0, "a formula")
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# Semantics


class MissingAtom(KeyError):
    def __init__(self, name: str):
        super().__init__(name)
        self.name = name


def evaluate(f: Formula, assignment: Mapping[str, bool]) -> bool:
    match f:
        case Atom(name=name):
            if name not in assignment:
                raise MissingAtom(name)
            return bool(assignment[name])
        case Not(body=body):
            return not evaluate(body, assignment)
        case Binary(connective=c, left=left, right=right):
            a = evaluate(left, assignment)
            b = evaluate(right, assignment)
            if c is AND:
                return a and b
            if c is OR:
                return a or b
            if c is IMPLIES:
                return (not a) or b
            return a == b
    raise TypeError(f"not a formula: {f!r}")


def atoms(*formulas: Formula) -> list[str]:
    """Sorted atom names occurring in any of ``formulas``."""
    names: set[str] = set()
    for f in formulas:
        for sub in subformulas(f):
            if isinstance(sub, Atom):
                names.add(sub.name)
    return sorted(names)


def truth_table_rows(names: list[str]) -> Iterator[dict[str, bool]]:
    for values in itertools.product((False, True), repeat=len(names)):
        yield dict(zip(names, values))


def _postorder(f: Formula) -> Iterator[Formula]:
    match f:
        case Not(body=body):
            yield from _postorder(body)
        case Binary(left=left, right=right):
            yield from _postorder(left)
            yield from _postorder(right)
    yield f


def subformulas(f: Formula) -> tuple[Formula, ...]:
    """Distinct subtrees of ``f`` (``f`` included) in post-order of first occurrence."""
    return tuple(dict.fromkeys(_postorder(f)))


# ---------------------------------------------------------------------------
# Step complexity


def _default_base() -> dict[Connective, int]:
    return {Connective.NOT: 1, AND: 1, OR: 1, IMPLIES: 2, IFF: 3}


@dataclass(frozen=True)
class ComplexityWeights:
    """Weights for the nesting-weighted operator count.

    ``base`` is charged for every connective; ``nest`` is charged on top when
    the connective applies to a parenthesized (binary-rooted) operand;
    ``paren_unit`` is charged for every parenthesized operand.
    """

    base: Mapping[Connective, int] = field(default_factory=_default_base)
    nest: Mapping[Connective, int] = field(default_factory=_default_base)
    paren_unit: int = 1

    def __post_init__(self) -> None:
        for table in (self.base, self.nest):
            if any(v < 0 for v in table.values()):
                raise ValueError("complexity weights must be non-negative")
        if self.paren_unit < 0:
            raise ValueError("paren_unit must be non-negative")

    def __hash__(self) -> int:
        return hash(
            (tuple(sorted((k.name, v) for k, v in self.base.items())),
             tuple(sorted((k.name, v) for k, v in self.nest.items())),
             self.paren_unit)
        )

    def to_dict(self) -> dict:
        return {
            "base": {k.name: v for k, v in self.base.items()},
            "nest": {k.name: v for k, v in self.nest.items()},
            "paren_unit": self.paren_unit,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "ComplexityWeights":
        return cls(
            base={Connective[k]: int(v) for k, v in data["base"].items()},
            nest={Connective[k]: int(v) for k, v in data["nest"].items()},
            paren_unit=int(data["paren_unit"]),
        )


DEFAULT_WEIGHTS = ComplexityWeights()


def complexity(f: Formula, w: ComplexityWeights = DEFAULT_WEIGHTS) -> int:
    """Nesting-weighted operator count; atoms score 0.

    >>> complexity(parse("A -> (B | C)"))
    6
    """
    match f:
        case Atom():
            return 0
        case Not(body=body):
            nested = isinstance(body, Binary)
            own = w.base[Connective.NOT] + (w.nest[Connective.NOT] + w.paren_unit if nested else 0)
            return own + complexity(body, w)
        case Binary(connective=c, left=left, right=right):
            parens = isinstance(left, Binary) + isinstance(right, Binary)
            own = w.base[c] + (w.nest[c] if parens else 0) + parens * w.paren_unit
            return own + complexity(left, w) + complexity(right, w)
    raise TypeError(f"not a formula: {f!r}")


FormulaLike = Union[Formula, str]


def as_formula(f: FormulaLike) -> Formula:
    return parse(f) if isinstance(f, str) else f
