import json

import pytest

from conftest import P, simp_n, negated_conj, showcase, toy_problem
from mockrun import student_script, build_states, ENDPOINTS
from kgtutor.cli import main
from kgtutor.formula import parse
from kgtutor.io import claim_to_dict, problem_to_dict, read_pairs, save_problem, save_states
from kgtutor.rules import RuleId
from kgtutor.solutionspace import ProofState, StepClaim

# answers every feedback role's required fields
FEEDBACK = json.dumps({
    "STUDENT_ERRORS": "none", "NEXT_STEP_CORRECTNESS": "Correct", "PEER_FEEDBACK": "ok",
    "TEACHER_FEEDBACK": "ok", "TEACHER_FEEDBACK_CORRECTNESS": "Correct",
    "JUDGE_ACTION": "Enhanced", "FINAL_FEEDBACK": "ok",
})


def run(*argv):
    return main([str(a) for a in argv])


def write_json(path, data):
    path.write_text(json.dumps(data, ensure_ascii=False), encoding="utf-8")
    return path


def mock_endpoints(path, script_name="script.json", default=FEEDBACK):
    eps = [{**e.to_dict(), "base_url": "mock:", "mock": {"script": script_name, "default": default}}
           for e in ENDPOINTS]
    return write_json(path, {"endpoints": eps, "saturation": {"max_complexity": 4}})


@pytest.fixture
def workspace(tmp_path):
    """Problems, spaces, states and a mock endpoint file for the mock-run states."""
    spaces, states = build_states()
    probs = tmp_path / "problems"
    probs.mkdir()
    for st in states:
        save_problem(probs / f"{st.problem.id}.json", st.problem)
    rc = run("build-space", "--problems", probs, "--out", tmp_path / "spaces", "--max-complexity", 4)
    assert rc == 0
    sdir = tmp_path / "states"
    sdir.mkdir()
    for st in states:
        save_states(sdir / f"{st.id}.json", [st])
    write_json(tmp_path / "script.json", student_script(spaces, states))
    mock_endpoints(tmp_path / "endpoints.json")
    return tmp_path


def test_build_space_summary(tmp_path, capsys):
    save_problem(tmp_path / "a.json", toy_problem(0))
    save_problem(tmp_path / "d.json", showcase())
    assert run("build-space", "--problems", tmp_path, "--out", tmp_path / "out") == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0].startswith("toy00: statements=") and "saturation_complete=true" in out[0]
    assert out[1].startswith("showcase:")
    space = json.loads((tmp_path / "out" / "showcase.space.json").read_text())
    assert {"¬(S → Y)", "¬(I ∧ Q)", "(S → Y)"} <= set(space["statements"])


def test_build_space_cap_one(tmp_path, capsys):
    save_problem(tmp_path / "a.json", toy_problem(1))
    assert run("build-space", "--problems", tmp_path, "--out", tmp_path / "o", "--max-statements", 1) == 0
    assert "saturation_complete=false" in capsys.readouterr().out


def test_build_space_input_errors(tmp_path):
    write_json(tmp_path / "bad.json", {"id": "x", "premises": ["A"], "conclusion": "A"})
    assert run("build-space", "--problems", tmp_path, "--out", tmp_path / "o") == 1
    (tmp_path / "bad.json").write_text('{"id": "x", "premises": ["A ∧"], "conclusion": "B"}')
    assert run("build-space", "--problems", tmp_path, "--out", tmp_path / "o") == 1
    assert run("build-space", "--problems", tmp_path / "nope", "--out", tmp_path / "o") == 1
    assert run("build-space", "--problems", tmp_path, "--out", tmp_path / "o", "--rules", "MP,Zap") == 1


def _diagnose(tmp_path, capsys, problem, state, claim):
    save_problem(tmp_path / "p.json", problem)
    assert run("build-space", "--problems", tmp_path / "p.json", "--out", tmp_path) == 0
    save_states(tmp_path / "s.states", [state])
    write_json(tmp_path / "c.claim", claim_to_dict(claim))
    capsys.readouterr()
    rc = run("diagnose", "--space", tmp_path / f"{problem.id}.space.json",
             "--state", tmp_path / "s.states", "--claim", tmp_path / "c.claim")
    return rc, json.loads(capsys.readouterr().out)


def test_diagnose_simp_n(tmp_path, capsys):
    pr, st = simp_n()
    rc, d = _diagnose(tmp_path, capsys, pr, st, StepClaim(parse("N"), RuleId.Simp, P("(M ∧ N)")))
    assert rc == 0 and d["label"] == "Optimal"


def test_diagnose_negated_conjunction(tmp_path, capsys):
    pr = negated_conj()
    rc, d = _diagnose(tmp_path, capsys, pr, ProofState(pr),
                      StepClaim(parse("(G ∧ B)"), RuleId.DN, P("¬(¬G ∧ B)")))
    assert rc == 0 and (d["label"], d["reason"]) == ("Incorrect", "BadJustification")


def test_diagnose_absent_parent(tmp_path, capsys):
    pr = toy_problem(1)
    rc, d = _diagnose(tmp_path, capsys, pr, ProofState(pr),
                      StepClaim(parse("C"), RuleId.MP, P("(B → C)", "B")))
    assert (d["label"], d["reason"]) == ("Incorrect", "UnknownParent")


def test_diagnose_bad_state_file(tmp_path):
    pr = toy_problem(1)
    save_problem(tmp_path / "p.json", pr)
    run("build-space", "--problems", tmp_path / "p.json", "--out", tmp_path)
    write_json(tmp_path / "s.states", {"problem": problem_to_dict(pr), "states": [
        {"id": "x", "intermediates": [{"statement": "C", "rule": "MP", "parents": ["(B → C)", "B"]}]}]})
    write_json(tmp_path / "c.claim", {"statement": "B", "rule": "MP", "parents": ["(A → B)", "A"]})
    assert run("diagnose", "--space", tmp_path / "toy01.space.json", "--state", tmp_path / "s.states",
               "--claim", tmp_path / "c.claim") == 1


def test_simulate_evaluate_report(workspace, capsys):
    w = workspace
    assert run("simulate", "--spaces", w / "spaces", "--states", w / "states",
               "--endpoints", w / "endpoints.json", "--out", w / "claims.jsonl") == 0
    assert len((w / "claims.jsonl").read_text().splitlines()) == 20
    assert run("evaluate", "--pairs-in", w / "claims.jsonl", "--spaces", w / "spaces",
               "--endpoints", w / "endpoints.json", "--out", w / "pairs.jsonl") == 0
    first = (w / "pairs.jsonl").read_bytes()
    pairs = read_pairs(w / "pairs.jsonl")
    assert len(pairs) == 60 and len({p.key for p in pairs}) == 60
    assert len({p.config_hash for p in pairs}) == 1
    # rerun is a no-op
    assert run("evaluate", "--pairs-in", w / "claims.jsonl", "--spaces", w / "spaces",
               "--endpoints", w / "endpoints.json", "--out", w / "pairs.jsonl") == 0
    assert (w / "pairs.jsonl").read_bytes() == first
    capsys.readouterr()
    assert run("report", "--pairs", w / "pairs.jsonl", "--out", w / "report") == 0
    out = capsys.readouterr().out
    assert out.startswith("model,condition,")
    assert "eta_squared[condition]=" in out
    assert (w / "report" / "summary.csv").exists()
    rep = json.loads((w / "report" / "report.json").read_text())
    assert len(rep["summary"]) == 6


def test_report_reproducible(workspace, capsys):
    w = workspace
    for n in (1, 2):
        run("simulate", "--spaces", w / "spaces", "--states", w / "states",
            "--endpoints", w / "endpoints.json", "--out", w / f"c{n}.jsonl")
        run("evaluate", "--pairs-in", w / f"c{n}.jsonl", "--spaces", w / "spaces",
            "--endpoints", w / "endpoints.json", "--out", w / f"p{n}.jsonl")
        capsys.readouterr()
        run("report", "--pairs", w / f"p{n}.jsonl", "--format", "json")
        if n == 1:
            a = capsys.readouterr().out
    assert capsys.readouterr().out == a
    assert (w / "p1.jsonl").read_bytes() == (w / "p2.jsonl").read_bytes()


def test_flagged_exit_code(workspace):
    w = workspace
    mock_endpoints(w / "bad_endpoints.json", default="unstructured reply")
    assert run("simulate", "--spaces", w / "spaces", "--states", w / "states",
               "--endpoints", w / "endpoints.json", "--out", w / "claims.jsonl") == 0
    assert run("evaluate", "--pairs-in", w / "claims.jsonl", "--spaces", w / "spaces",
               "--endpoints", w / "bad_endpoints.json", "--out", w / "pairs.jsonl",
               "--conditions", "peer") == 2
    assert all(p.flagged for p in read_pairs(w / "pairs.jsonl"))


def test_missing_api_key_fails_before_requests(workspace, monkeypatch, capsys):
    w = workspace
    monkeypatch.delenv("KG_TEST_ABSENT_KEY", raising=False)
    write_json(w / "real.json", [{"name": "m1", "base_url": "http://127.0.0.1:9",
                                  "api_key_env": "KG_TEST_ABSENT_KEY"}])
    rc = run("simulate", "--spaces", w / "spaces", "--states", w / "states",
             "--endpoints", w / "real.json", "--out", w / "claims.jsonl")
    assert rc == 1
    assert "KG_TEST_ABSENT_KEY" in capsys.readouterr().err
    assert not (w / "claims.jsonl").exists()


def test_simulate_input_errors(workspace):
    w = workspace
    assert run("simulate", "--spaces", w / "spaces", "--states", w / "states",
               "--endpoints", w / "endpoints.json", "--out", w / "c.jsonl", "--roles", "peer") == 1
    assert run("simulate", "--spaces", w / "nowhere", "--states", w / "states",
               "--endpoints", w / "endpoints.json", "--out", w / "c.jsonl") == 1
    assert run("evaluate", "--pairs-in", w / "c.jsonl", "--spaces", w / "spaces",
               "--endpoints", w / "endpoints.json", "--out", w / "p.jsonl",
               "--conditions", "peer,boss") == 1


def test_report_all_correct(tmp_path, capsys):
    from test_io import pair
    from kgtutor.io import write_pairs
    from kgtutor.diagnosis import DiagLabel, DiagReason, Diagnosis
    recs = []
    for n, lab in enumerate([DiagLabel.OPTIMAL, DiagLabel.VALID_ALTERNATIVE, DiagLabel.INCORRECT] * 3):
        r = pair(n)
        r.truth = Diagnosis(lab, DiagReason.DISTANCE_UNCHANGED, 2, 2, "")
        r.agent_label = {"raw": "x", "mapped": lab.value}
        recs.append(r)
    write_pairs(tmp_path / "p.jsonl", recs)
    assert run("report", "--pairs", tmp_path / "p.jsonl", "--format", "json") == 0
    rep = json.loads(capsys.readouterr().out)
    row = rep["summary"][0]
    assert (row["macro_f1"], row["over_rejection"], row["over_validation"]) == (1.0, 0.0, 0.0)
