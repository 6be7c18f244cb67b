"""Build a solution space for a small proof problem and diagnose a few steps.

Run with ``python demos/01_solution_space.py``.
"""
from kgtutor import (
    Problem,
    ProofState,
    RuleId,
    SaturationConfig,
    StepClaim,
    classify,
    complexity,
    distance,
    optimal_steps,
    parse,
    saturate,
)

# %% formulas
# The parser accepts ASCII spellings; every formula prints in one canonical form.
f = parse("~(S -> Y)")
print(f.text)                               # ¬(S → Y)
print(parse("A | B").text, complexity(parse("A | B")))          # (A ∨ B) 1
print(parse("A -> (B | C)").text, complexity(parse("A -> (B | C)")))  # 6

# %% a problem
# Three premises, one conclusion. Two steps suffice: MT gives ¬K, then DS.
problem = Problem(
    "demo",
    ("(K → O)", "¬O", "(K ∨ L)"),
    "L",
)
space = saturate(problem, SaturationConfig(max_complexity=6))
print(len(space.statements), "statements,", len(space.derivations), "edges,",
      "complete" if space.saturation_complete else "capped")

# %% distances
start = ProofState(problem)
print("distance from the premises:", distance(space, start))
for step in optimal_steps(space, start):
    print("  optimal:", step.statement.text, "by", step.rule.value,
          "from", [p.text for p in step.parents])

# %% diagnosing student steps
claims = [
    StepClaim(parse("¬K"), RuleId.MT, (parse("K → O"), parse("¬O"))),   # on the shortest path
    StepClaim(parse("(L ∨ K)"), RuleId.Com, (parse("K ∨ L"),)),        # valid, no progress
    StepClaim(parse("¬K"), RuleId.MP, (parse("K → O"), parse("¬O"))),   # wrong rule name
    StepClaim(parse("L"), RuleId.DS, (parse("K ∨ L"), parse("¬K"))),    # parent not derived yet
]
for c in claims:
    d = classify(space, start, c)
    print(f"{c.statement.text:10s} {c.rule.value:5s} -> {d.label.value:17s} "
          f"{d.reason.value:18s} d: {d.d_before} -> {d.d_after}")

# %% walking the optimal path to the end
state = start
while (d := distance(space, state)) != 0:
    step = optimal_steps(space, state, limit=1)[0]
    state = state.extend(step.statement, step.rule, step.parents)
    print(f"d={d}: add {step.statement.text} [{step.rule.value}]")
print("done, conclusion derived:", problem.conclusion in state.known)
