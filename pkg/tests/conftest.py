from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from kgtutor.formula import Atom, Binary, Connective, Not, parse
from kgtutor.solutionspace import Problem, ProofState, SaturationConfig, saturate

settings.register_profile("default", deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

BINARY = [Connective.AND, Connective.OR, Connective.IMPLIES, Connective.IFF]


def formulas(names: str = "ABC", max_leaves: int = 6):
    atoms = st.sampled_from([Atom(n) for n in names])
    return st.recursive(
        atoms,
        lambda kids: st.one_of(
            kids.map(Not),
            st.tuples(st.sampled_from(BINARY), kids, kids).map(lambda t: Binary(*t)),
        ),
        max_leaves=max_leaves,
    )


def P(*texts):
    return tuple(parse(t) for t in texts)


# ≤ 3 atoms, checked under complexity cap 4
TOY_PROBLEMS = [
    (["(A → B)", "A"], "B"),
    (["(A → B)", "(B → C)", "A"], "C"),
    (["(A ∨ B)", "¬A"], "B"),
    (["(A → B)", "¬B"], "¬A"),
    (["(A ∧ B)"], "(B ∧ A)"),
    (["(A ∧ B)", "(B → C)"], "C"),
    (["A", "B"], "(A ∧ B)"),
    (["A"], "(A ∨ B)"),
    (["¬(A ∨ B)"], "¬A"),
    (["(A → B)", "(B → C)"], "(A → C)"),
    (["(A → B)", "(C → B)", "(A ∨ C)"], "(B ∨ B)"),
    (["¬¬A"], "A"),
    (["(A → B)"], "(¬B → ¬A)"),
    (["(A → B)"], "(¬A ∨ B)"),
    (["(A ↔ B)", "A"], "B"),
    (["(A ∨ B)", "(A → C)", "(B → C)"], "C"),
    (["(A ∧ B)", "¬A"], "C"),
    (["(A → B)", "(B → C)", "¬C"], "¬A"),
    (["(A ∨ B)", "(A → C)", "¬C"], "B"),
    (["¬A", "(B → A)"], "¬B"),
    (["(A ∧ (B ∨ C))"], "(B ∨ C)"),
    (["(¬A ∨ B)", "A"], "B"),
    (["¬(A ∧ B)", "A"], "¬B"),
    (["(A → B)", "(A → C)", "A"], "(B ∧ C)"),
    (["(A ∨ B)", "¬B"], "A"),
]
TOY_CAP = 4
TOY_CONFIG = SaturationConfig(max_complexity=TOY_CAP)


def toy_problem(n: int) -> Problem:
    prem, concl = TOY_PROBLEMS[n]
    return Problem(f"toy{n:02d}", P(*prem), parse(concl))


@pytest.fixture(scope="session")
def toy_spaces():
    return [saturate(toy_problem(n), TOY_CONFIG) for n in range(len(TOY_PROBLEMS))]


# -- worked examples ----------------------------------------------------------


def simp_n():
    pr = Problem("simp_n", P("((¬K ∨ L) → (M ∧ N))", "(K → O)", "¬O"), parse("N"))
    st_ = (ProofState(pr)
           .extend(parse("¬K"), "MT", P("(K → O)", "¬O"))
           .extend(parse("(¬K ∨ L)"), "Add", P("¬K"))
           .extend(parse("(M ∧ N)"), "MP", P("((¬K ∨ L) → (M ∧ N))", "(¬K ∨ L)")))
    return pr, st_


def negated_conj():
    return Problem("negconj", P("¬(¬G ∧ B)", "(G → D)"), parse("(G ∨ ¬B)"))


def bicond_state():
    pr = Problem("bicond", P("(B ↔ ¬J)", "(¬N ∨ J)", "(B ∨ ¬N)", "(¬B → ¬N)"), parse("(B → ¬N)"))
    st_ = (ProofState(pr)
           .extend(parse("((B → ¬J) ∧ (¬J → B))"), "Equiv", P("(B ↔ ¬J)"))
           .extend(parse("(N → J)"), "Impl", P("(¬N ∨ J)")))
    return pr, st_


def showcase():
    pr = Problem("showcase", P("((S → Y) ∨ (I ∧ Q))", "((I ∧ Q) → D)", "¬D", "((S → Y) → D)"),
                 parse("Y"), 4)
    return pr


@pytest.fixture(scope="session")
def simp_n_space():
    pr, st_ = simp_n()
    return saturate(pr), st_


@pytest.fixture(scope="session")
def negconj_space():
    pr = negated_conj()
    return saturate(pr), ProofState(pr)


@pytest.fixture(scope="session")
def bicond_space():
    pr, st_ = bicond_state()
    return saturate(pr), st_


@pytest.fixture(scope="session")
def showcase_space():
    return saturate(showcase())


# -- acceptance report -------------------------------------------------------------

ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
