"""Seeded generator of rule instances whose parents match each rule's schema."""
from __future__ import annotations

import random

from kgtutor.formula import Atom, Binary, Connective, Not
from kgtutor.rules import RuleId

AND, OR, IMP, IFF = Connective.AND, Connective.OR, Connective.IMPLIES, Connective.IFF
_BIN = [AND, OR, IMP, IFF]


def rand_formula(rng: random.Random, depth: int, names: str = "ABCD"):
    if depth == 0 or rng.random() < 0.3:
        return Atom(rng.choice(names))
    if rng.random() < 0.25:
        return Not(rand_formula(rng, depth - 1, names))
    return Binary(rng.choice(_BIN), rand_formula(rng, depth - 1, names),
                  rand_formula(rng, depth - 1, names))


def embed(rng: random.Random, core, depth: int = 2):
    """Wrap ``core`` in a random context so rewrites happen below the root."""
    f = core
    for _ in range(rng.randint(0, depth)):
        other = rand_formula(rng, 1)
        k = rng.random()
        if k < 0.2:
            f = Not(f)
        elif k < 0.6:
            f = Binary(rng.choice(_BIN), f, other)
        else:
            f = Binary(rng.choice(_BIN), other, f)
    return f


def instance(rule: RuleId, rng: random.Random):
    """(parents, candidates) for one random application of ``rule``."""
    r = lambda d=2: rand_formula(rng, d)  # noqa: E731
    p, q, s, t = r(), r(), r(), r()
    B = Binary
    if rule is RuleId.MP:
        return [B(IMP, p, q), p], None
    if rule is RuleId.MT:
        return [B(IMP, p, q), Not(q)], None
    if rule is RuleId.Conj:
        while q == p:
            q = r()
        return [p, q], None
    if rule is RuleId.Simp:
        return [B(AND, p, q)], None
    if rule is RuleId.Add:
        return [p], {q, s}
    if rule is RuleId.DS:
        return ([B(OR, p, q), Not(p)] if rng.random() < 0.5 else [B(OR, p, q), Not(q)]), None
    if rule is RuleId.HS:
        return [B(IMP, p, q), B(IMP, q, s)], None
    if rule is RuleId.CD:
        return [B(IMP, p, q), B(IMP, s, t), B(OR, p, s)], None
    cores = {
        RuleId.Impl: [B(IMP, p, q), B(OR, Not(p), q)],
        RuleId.DN: [Not(Not(p)), p],
        RuleId.CP: [B(IMP, p, q), B(IMP, Not(p), Not(q))],
        RuleId.Com: [B(OR, p, q), B(AND, p, q)],
        RuleId.Assoc: [B(OR, B(OR, p, q), s), B(AND, p, B(AND, q, s))],
        RuleId.Dist: [B(AND, p, B(OR, q, s)), B(OR, B(AND, p, q), B(AND, p, s))],
        RuleId.Equiv: [B(IFF, p, q), B(AND, B(IMP, p, q), B(IMP, q, p))],
        RuleId.DeM: [Not(B(AND, p, q)), Not(B(OR, p, q)), B(OR, Not(p), Not(q)),
                     B(AND, Not(p), Not(q))],
    }[rule]
    core = rng.choice(cores)
    cands = {Not(Not(p))} if rule is RuleId.DN else None
    return [embed(rng, core)], cands
