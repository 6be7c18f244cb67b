"""Acceptance criteria 1-10, one test each.

Every test records a single ``criterion N: PASS/FAIL`` line that the
terminal summary prints after the run (see ``conftest.py``).
"""
import json
import random
import time
import zlib

import pytest

import conftest
from conftest import P, TOY_CAP, TOY_CONFIG, TOY_PROBLEMS, showcase, bicond_state, negated_conj, simp_n
from instances import instance
from mockrun import ENDPOINTS, Crash, CrashAfter, build_states, provider
from oracles import (
    bfs_distance,
    eta_sq,
    f1_from_counts,
    justifies,
    kappa,
    naive_fixpoint,
    u_count,
    u_exact_p,
)
from kgtutor.agents import (
    Condition,
    MockProvider,
    ModelEndpoint,
    Role,
    render_prompt,
    system_text,
    validated_exchange,
)
from kgtutor.diagnosis import DiagLabel, DiagReason, classify
from kgtutor.formula import complexity, parse
from kgtutor.metrics import (
    Confusion3,
    cohens_kappa,
    eta_squared,
    f1_per_class,
    mann_whitney_u,
    over_rejection,
    over_validation,
)
from kgtutor.io import claim_from_dict, read_pairs
from kgtutor.pipeline import evaluate, read_claims, simulate
from kgtutor.rules import RuleId, apply_forward, soundness_oracle
from kgtutor.solutionspace import ProofState, StepClaim, distance, saturate


class Criterion:
    """Collects the checks of one criterion and records the verdict."""

    def __init__(self, n: int, title: str):
        self.n, self.title = n, title
        self.notes: list[str] = []
        self.t0 = time.perf_counter()

    def note(self, text: str) -> None:
        self.notes.append(text)

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        secs = time.perf_counter() - self.t0
        verdict = "PASS" if exc_type is None else "FAIL"
        detail = "; ".join(self.notes + ([f"{exc_type.__name__}: {exc}"] if exc else []))
        line = f"criterion {self.n}: {verdict} ({self.title}; {secs:.2f}s{'; ' + detail if detail else ''})"
        conftest.ACCEPTANCE[self.n] = line
        print(line)
        return False


def valid_edges(space, state):
    known = set(state.known)
    for e in space.derivations:
        s = space.statements[e.result]
        if s not in known and all(space.statements[p] in known for p in e.parents):
            yield StepClaim(s, e.rule, tuple(space.statements[p] for p in e.parents))


def walk(space, rng, steps):
    state = ProofState(space.problem)
    for _ in range(steps):
        options = list(valid_edges(space, state))
        if not options:
            break
        c = rng.choice(options)
        state = state.extend(c.statement, c.rule, c.parents)
    return state


def test_criterion_01_complexity():
    with Criterion(1, "complexity of the three worked formulas") as c:
        for text, want in (("F", 0), ("A ∨ B", 1), ("A → (B ∨ C)", 6)):
            f = parse(text)
            t0 = time.perf_counter()
            got = complexity(f)
            dt = time.perf_counter() - t0
            assert got == want, f"c({text}) = {got}, expected {want}"
            assert dt < 1e-3, f"c({text}) took {dt * 1e3:.3f} ms"
        c.note("0, 1, 6 exact")


def test_criterion_02_rule_soundness():
    with Criterion(2, "1000 random instances per rule vs truth tables") as c:
        produced = 0
        for rule in RuleId:
            rng = random.Random(zlib.crc32(b"acceptance-" + rule.value.encode()))
            nonempty = 0
            for _ in range(1000):
                parents, cands = instance(rule, rng)
                results = apply_forward(rule, parents, cands)
                nonempty += bool(results)
                for res in results:
                    produced += 1
                    assert soundness_oracle(rule, parents, res), (rule, parents, res)
            assert nonempty == 1000, f"{rule.value}: {1000 - nonempty} instances produced nothing"
        secs = time.perf_counter() - c.t0
        assert secs < 30, f"took {secs:.1f}s"
        c.note(f"16000 instances, {produced} results, 0 failures")


def test_criterion_03_showcase_replay():
    with Criterion(3, "showcase problem intermediates") as c:
        pr = showcase()
        sp = saturate(pr)
        p1, p2, p3, p4 = pr.premises
        five, six = parse("¬(S → Y)"), parse("¬(I ∧ Q)")
        assert sp.has_edge(five, RuleId.MT, (p3, p4))
        assert sp.has_edge(six, RuleId.MT, (p3, p2))
        assert sp.has_edge(parse("(S → Y)"), RuleId.DS, (six, p1))
        assert sp.has_edge(parse("¬(¬S ∨ Y)"), RuleId.Impl, (five,))
        secs = time.perf_counter() - c.t0
        assert secs < 10, f"took {secs:.1f}s"
        c.note(f"{len(sp.statements)} statements, d0={distance(sp, ProofState(pr))}")


def test_criterion_04_oracle_equivalence():
    with Criterion(4, "saturation and distance vs brute force") as c:
        assert len(TOY_PROBLEMS) >= 20
        checked = 0
        for n in range(len(TOY_PROBLEMS)):
            pr = conftest.toy_problem(n)
            sp = saturate(pr, TOY_CONFIG)
            known, _ = naive_fixpoint(pr.premises, pr.conclusion, TOY_CAP)
            assert set(sp.statements) == known, pr.id
            rng = random.Random(n)
            for k in range(4):
                st = walk(sp, rng, k % 3)
                d = distance(sp, st)
                b = bfs_distance(pr.premises, pr.conclusion, TOY_CAP, known=st.known)
                assert (d if isinstance(d, int) else None) == b, (pr.id, st.known, d, b)
                checked += 1
        secs = time.perf_counter() - c.t0
        assert secs < 60, f"took {secs:.1f}s"
        c.note(f"{len(TOY_PROBLEMS)} problems, {checked} distances")


def test_criterion_05_diagnosis_invariants():
    with Criterion(5, "diagnosis invariants on sampled valid edges") as c:
        rng = random.Random(55)
        samples = rule_flips = parent_flips = alternatives = 0
        for n in range(len(TOY_PROBLEMS)):
            sp = saturate(conftest.toy_problem(n), TOY_CONFIG)
            for k in range(6):
                st = walk(sp, rng, k % 3)
                for claim in valid_edges(sp, st):
                    d = classify(sp, st, claim)
                    assert d.label is not DiagLabel.INCORRECT
                    if d.d_before is not None:
                        assert d.d_after in (d.d_before - 1, d.d_before)
                    samples += 1
                    for r in RuleId:
                        if r is not claim.rule:
                            bent = StepClaim(claim.statement, r, claim.parents)
                            assert classify(sp, st, bent).label is DiagLabel.INCORRECT
                            rule_flips += 1
                    for i, parent in enumerate(claim.parents):
                        # other known statements, plus a fresh formula nobody derived
                        subs = [s for s in st.known if s not in claim.parents]
                        subs.append(parse(f"¬({parent.text} ∧ Z)"))
                        for other in subs:
                            ps = claim.parents[:i] + (other,) + claim.parents[i + 1:]
                            if justifies(claim.rule.value, ps, claim.statement):
                                # the swapped parent is itself a correct justification
                                alternatives += 1
                                continue
                            bent = StepClaim(claim.statement, claim.rule, ps)
                            assert classify(sp, st, bent).label is DiagLabel.INCORRECT
                            parent_flips += 1
        assert samples >= 500, f"only {samples} samples"
        c.note(f"{samples} edges, {rule_flips} rule and {parent_flips} parent perturbations "
               f"all Incorrect; {alternatives} swaps were themselves valid justifications")


def test_criterion_06_worked_diagnoses():
    with Criterion(6, "worked diagnoses") as c:
        pr3 = negated_conj()
        sp3 = saturate(pr3)
        d = classify(sp3, ProofState(pr3), StepClaim(parse("(G ∧ B)"), RuleId.DN, P("¬(¬G ∧ B)")))
        assert (d.label, d.reason) == (DiagLabel.INCORRECT, DiagReason.BAD_JUSTIFICATION)

        prs, sts = simp_n()
        sps = saturate(prs)
        d = classify(sps, sts, StepClaim(parse("N"), RuleId.Simp, P("(M ∧ N)")))
        assert d.label is DiagLabel.OPTIMAL
        before = bfs_distance(prs.premises, prs.conclusion, 10, known=sts.known, max_depth=3)
        after = bfs_distance(prs.premises, prs.conclusion, 10,
                             known=sts.known + (parse("N"),), max_depth=3)
        assert (before, after) == (d.d_before, d.d_after) == (1, 0)

        pr2, st2 = bicond_state()
        sp2 = saturate(pr2)
        d = classify(sp2, st2, StepClaim(parse("(J ∨ ¬N)"), RuleId.Com, P("(¬N ∨ J)")))
        assert d.label is not DiagLabel.INCORRECT
        c.note(f"DN Incorrect/BadJustification; Simp Optimal 1->0; Com {d.label.value}")


def test_criterion_07_metrics_arithmetic():
    with Criterion(7, "metric fixtures vs arithmetic oracles") as c:
        short = {"O": DiagLabel.OPTIMAL, "VA": DiagLabel.VALID_ALTERNATIVE, "I": DiagLabel.INCORRECT}
        cells = {("O", "O"): 8, ("O", "VA"): 2, ("VA", "VA"): 5, ("VA", "I"): 5, ("I", "I"): 10}
        conf = Confusion3.from_counts({(short[t], short[p]): n for (t, p), n in cells.items()})
        assert conf.total == 30 and conf[DiagLabel.VALID_ALTERNATIVE, DiagLabel.INCORRECT] == 5
        f1 = f1_per_class(conf)
        want = f1_from_counts(cells)
        for k, lab in short.items():
            assert abs(f1[lab] - want[k]) <= 1e-9
        assert abs(over_rejection(Confusion3.from_counts(
            {(short["VA"], short["I"]): 5, (short["VA"], short["VA"]): 7})) - 5 / 12) <= 1e-9
        assert abs(over_validation(Confusion3.from_counts(
            {(short["I"], short["O"]): 3, (short["I"], short["VA"]): 4,
             (short["I"], short["I"]): 3})) - 0.7) <= 1e-9
        assert abs(eta_squared([1, 0, 1, 1], list("aabb")) - eta_sq([[1, 0], [1, 1]])) <= 1e-9
        r1 = ["A"] * 20 + ["B"] * 20 + ["A"] * 10 + ["B"] * 10
        r2 = ["A"] * 20 + ["B"] * 20 + ["B"] * 10 + ["A"] * 10
        assert cohens_kappa(r1, r2) == kappa(r1, r2)
        assert cohens_kappa(["A"] * 4, ["A", "A", "B", "B"]) == 0.0
        for a, b in (([1, 3], [2, 4]), ([1, 2, 3], [4, 5, 6]), ([1, 2, 2], [2, 3, 5, 5])):
            r = mann_whitney_u(a, b)
            assert r.method == "exact"
            assert r.U == u_count(a, b)
            assert r.p == u_exact_p(a, b)
        assert mann_whitney_u([1, 2, 3], [4, 5, 6]).U == 0
        c.note("F1/OR/OV/eta^2 within 1e-9; kappa and exact U identical")


def _full_run(tmp, spaces, states, prov=None):
    prov = prov or provider(spaces, states)
    claims, pairs = tmp / "claims.jsonl", tmp / "pairs.jsonl"
    simulate(states, ENDPOINTS, claims, prov, config_hash="acc")
    evaluate(read_claims(claims), spaces, ENDPOINTS, pairs, provider=prov, config_hash="acc")
    return claims, pairs, prov


def test_criterion_08_pipeline_determinism(tmp_path):
    with Criterion(8, "mock end-to-end grid, determinism and resume") as c:
        spaces, states = build_states()
        assert len(states) == 10 and len(ENDPOINTS) == 2
        runs = []
        for name in ("a", "b"):
            (tmp_path / name).mkdir()
            runs.append(_full_run(tmp_path / name, spaces, states))
        pairs_a = runs[0][1].read_bytes()
        lines = pairs_a.decode().splitlines()
        assert len(lines) == 60
        assert len({(r["instance_id"], r["model_name"], r["condition"])
                    for r in map(json.loads, lines)}) == 60
        assert pairs_a == runs[1][1].read_bytes()
        assert runs[0][0].read_bytes() == runs[1][0].read_bytes()

        crash = tmp_path / "crash"
        crash.mkdir()
        with pytest.raises(Crash):
            simulate(states, ENDPOINTS, crash / "claims.jsonl",
                     CrashAfter(provider(spaces, states), 8), config_hash="acc")
        simulate(states, ENDPOINTS, crash / "claims.jsonl", provider(spaces, states), config_hash="acc")
        claims = read_claims(crash / "claims.jsonl")
        with pytest.raises(Crash):
            evaluate(claims, spaces, ENDPOINTS, crash / "pairs.jsonl",
                     provider=CrashAfter(provider(spaces, states), 25), config_hash="acc")
        with (crash / "pairs.jsonl").open("a", encoding="utf-8") as fh:
            fh.write(lines[len((crash / "pairs.jsonl").read_text().splitlines())][:50])  # torn write
        evaluate(claims, spaces, ENDPOINTS, crash / "pairs.jsonl", provider=provider(spaces, states),
                 config_hash="acc")
        assert (crash / "pairs.jsonl").read_bytes() == pairs_a
        secs = time.perf_counter() - c.t0
        assert secs < 30, f"took {secs:.1f}s"
        c.note("60 records, byte-identical reruns, resumed file identical")


def test_criterion_09_retry_contract():
    with Criterion(9, "three-attempt retry boundary") as c:
        pr = conftest.toy_problem(0)
        prompts = render_prompt(Role.STUDENT, pr, ProofState(pr))
        good = json.dumps({"CANDIDATES": "B", "REASONING": "MP", "NEXT_STEP": "B", "RULE": "MP",
                           "PARENT_STATEMENTS": ["(A → B)", "A"]})
        ep = ModelEndpoint("mock")
        r = validated_exchange(ep, Role.STUDENT, prompts, MockProvider(queue=["junk", "junk", good]))
        assert (r.attempts_used, r.flagged) == (3, False)
        r = validated_exchange(ep, Role.STUDENT, prompts, MockProvider(queue=["junk"] * 3 + [good]))
        assert (r.attempts_used, r.flagged) == (3, True)
        c.note("2 bad + 1 good -> attempts_used=3; 3 bad -> flagged")


def test_criterion_10_information_containment(tmp_path):
    with Criterion(10, "peer prompts hide the expert rule and parents") as c:
        spaces, states = build_states()
        _, pairs_path, prov = _full_run(tmp_path, spaces, states)
        peer_system = system_text(Role.PEER)
        sent = {user for _, system, user in prov.calls if system == peer_system}
        assert len(sent) == 20
        seen = set()
        for rec in read_pairs(pairs_path):
            if rec.condition != Condition.PEER.value:
                continue
            state = next(s for s in states if s.id == rec.instance_id)
            claim = claim_from_dict(rec.claim)
            ctx = claim_from_dict(rec.solution_context)
            _, user = render_prompt(Role.PEER, state.problem, state, claim, ctx)
            assert user in sent
            seen.add(user)
            section = user.partition("OPTIMAL NEXT STEP:\n")[2]
            # the context section holds the statement and nothing else
            assert section == ctx.statement.text + "\n"
            assert ctx.rule.value not in section.split()
            assert not any(p.text in section for p in ctx.parents)
            # the whole prompt is unchanged when the context's rule and parents change
            other = StepClaim(ctx.statement, RuleId.CD if ctx.rule is not RuleId.CD else RuleId.MP,
                              P("(Z → Z)", "Z"))
            assert render_prompt(Role.PEER, state.problem, state, claim, other)[1] == user
        assert seen == sent
        c.note(f"{len(seen)} Peer prompts; context section carries the statement only; "
               "prompt invariant under rule/parent perturbation")
