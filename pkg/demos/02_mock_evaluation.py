"""End-to-end evaluation run against a deterministic mock model.

The mock student plays the first optimal step on p1 and names the wrong
rule on p2. The mock feedback roles answer "Correct" for p1 and
"Suboptimal" for p2. No network access is needed.

Run with ``python demos/02_mock_evaluation.py``.
"""
import json
import tempfile
from pathlib import Path

from kgtutor import Problem, ProofState, RuleId, SaturationConfig, optimal_steps, saturate
from kgtutor.agents import MockProvider, ModelEndpoint, Role, render_prompt, request_hash
from kgtutor.io import read_pairs
from kgtutor.metrics import results_table, summarize, to_csv
from kgtutor.pipeline import evaluate, read_claims, simulate

# %% two problems and their spaces
problems = [
    Problem("p1", ("(A → B)", "(B → C)", "A"), "C"),
    Problem("p2", ("(A → B)", "(B → C)", "¬C"), "¬A"),
]
cfg = SaturationConfig(max_complexity=4)
spaces = {p.id: saturate(p, cfg) for p in problems}
states = [ProofState(p, id=f"{p.id}-start") for p in problems]

# %% a scripted student
endpoint = ModelEndpoint("mock-model")
script = {}
for st in states:
    step = optimal_steps(spaces[st.problem.id], st, limit=1)[0]
    rule = step.rule.value if st.problem.id == "p1" else RuleId.MP.value  # p2 needs MT
    system, user = render_prompt(Role.STUDENT, st.problem, st)
    script[request_hash(endpoint, system, user)] = json.dumps({
        "CANDIDATES": step.statement.text,
        "REASONING": "follow the shortest derivation",
        "NEXT_STEP": step.statement.text,
        "RULE": rule,
        "PARENT_STATEMENTS": [p.text for p in step.parents],
    })


def feedback(ep, system, user):
    verdict = "Correct" if "(A → B)\n(2) (B → C)\n(3) A\n" in user else "Suboptimal"
    return json.dumps({
        "STUDENT_ERRORS": "none", "NEXT_STEP_CORRECTNESS": verdict,
        "PEER_FEEDBACK": "Nice.", "TEACHER_FEEDBACK": "Nice.",
        "TEACHER_FEEDBACK_CORRECTNESS": "Correct", "JUDGE_ACTION": "Enhanced",
        "FINAL_FEEDBACK": "Nice.",
    })


mock = MockProvider(script=script, default=feedback)

# %% simulate, then evaluate under the three feedback conditions
out = Path(tempfile.mkdtemp())
simulate(states, [endpoint], out / "claims.jsonl", mock)
summary = evaluate(read_claims(out / "claims.jsonl"), spaces, [endpoint], out / "pairs.jsonl",
                   provider=mock)
print(len(summary.written), "pair records,", summary.flagged, "flagged")

# %% per-record view: oracle truth beside the agent's label
for r in read_pairs(out / "pairs.jsonl"):
    print(f"{r.instance_id:9s} {r.condition:7s} truth={r.truth.label.value:9s} "
          f"agent={r.agent_label['mapped']}")

# %% tables
rows = [r.metric_row() for r in read_pairs(out / "pairs.jsonl")]
print(to_csv(summarize(rows)))
print(to_csv(results_table(rows)))
