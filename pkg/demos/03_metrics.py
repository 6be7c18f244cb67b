"""Metric helpers on synthetic tutor judgements.

Run with ``python demos/03_metrics.py``.
"""
import numpy as np

from kgtutor.diagnosis import DiagLabel
from kgtutor.metrics import (
    CLASSES,
    Confusion3,
    cohens_kappa,
    eta_squared,
    f1_per_class,
    macro_f1,
    mann_whitney_u,
    over_rejection,
    over_validation,
    tier_of,
)

rng = np.random.default_rng(0)

# %% a lenient tutor and a strict one
# truth drawn uniformly over the three classes
truth = rng.choice(len(CLASSES), size=300)


def judge(truth, p_correct, bias):
    """Right with probability p_correct, else pick by the bias weights."""
    pred = truth.copy()
    wrong = rng.random(len(truth)) > p_correct
    pred[wrong] = rng.choice(len(CLASSES), size=wrong.sum(), p=bias)
    return pred


lenient = judge(truth, 0.7, [0.6, 0.3, 0.1])    # leans towards Optimal
strict = judge(truth, 0.7, [0.1, 0.2, 0.7])     # leans towards Incorrect

labels = np.array(CLASSES, dtype=object)
for name, pred in (("lenient", lenient), ("strict", strict)):
    conf = Confusion3.from_labels(labels[truth], labels[pred])
    f1 = f1_per_class(conf)
    print(f"{name:8s} macro-F1={macro_f1(conf):.3f} "
          f"OR={over_rejection(conf):.3f} OV={over_validation(conf):.3f} "
          f"F1(O)={f1[DiagLabel.OPTIMAL]:.3f}")
    print(conf.counts)

# %% how much of the accuracy variance is explained by the tutor?
correct = np.concatenate([lenient == truth, strict == truth]).astype(float)
tutor = ["lenient"] * len(truth) + ["strict"] * len(truth)
print("eta^2 by tutor:", round(eta_squared(correct, tutor), 4))

# %% rubric scores from two raters
a = rng.integers(1, 4, size=40)
b = np.where(rng.random(40) < 0.6, a, rng.integers(1, 4, size=40))
print("kappa:", round(cohens_kappa(list(a), list(b)), 3))

# %% are scores higher on low-complexity steps?
complexity = rng.integers(0, 8, size=40)
low = a[[tier_of(c, "complexity") == "low" for c in complexity]]
high = a[[tier_of(c, "complexity") == "high" for c in complexity]]
print(mann_whitney_u(low, high))
