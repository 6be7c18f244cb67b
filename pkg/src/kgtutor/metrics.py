"""Diagnostic and agreement metrics over labeled solution-feedback pairs.

Rates are computed on a 3x3 confusion matrix over the oracle classes.
Indeterminate ground truth and unparseable agent labels are excluded from
every rate and counted separately.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

from .diagnosis import DiagLabel

__all__ = [
    "CLASSES",
    "Confusion3",
    "EmptySample",
    "DegenerateGrouping",
    "LengthMismatch",
    "MWUResult",
    "TierSpec",
    "DEFAULT_TIERS",
    "f1_per_class",
    "macro_f1",
    "over_rejection",
    "over_validation",
    "eta_squared",
    "mann_whitney_u",
    "cohens_kappa",
    "tier_of",
    "summarize",
    "results_table",
    "tier_table",
    "to_csv",
    "to_json",
]

O, VA, INC = DiagLabel.OPTIMAL, DiagLabel.VALID_ALTERNATIVE, DiagLabel.INCORRECT
CLASSES: tuple[DiagLabel, ...] = (O, VA, INC)


class EmptySample(ValueError):
    pass


class DegenerateGrouping(ValueError):
    pass


class LengthMismatch(ValueError):
    pass


def _label(x) -> DiagLabel | None:
    if x is None:
        return None
    if isinstance(x, DiagLabel):
        return x
    return DiagLabel(x)


@dataclass
class Confusion3:
    """Counts indexed by (truth, predicted) plus exclusion tallies."""

    counts: np.ndarray = field(default_factory=lambda: np.zeros((3, 3), dtype=np.int64))
    indeterminate: int = 0
    parse_failures: int = 0

    def __post_init__(self) -> None:
        self.counts = np.asarray(self.counts, dtype=np.int64).reshape(3, 3)
        if (self.counts < 0).any():
            raise ValueError("confusion counts must be non-negative")

    @classmethod
    def from_counts(cls, cells: Mapping[tuple, int]) -> "Confusion3":
        c = cls()
        for (t, p), n in cells.items():
            c.counts[CLASSES.index(_label(t)), CLASSES.index(_label(p))] += n
        return c

    @classmethod
    def from_labels(cls, truth: Iterable, predicted: Iterable) -> "Confusion3":
        """Tally paired labels; ``None`` predictions are parse failures."""
        c = cls()
        for t, p in zip(truth, predicted, strict=True):
            c.add(t, p)
        return c

    def add(self, truth, predicted) -> None:
        t = _label(truth)
        if t is DiagLabel.INDETERMINATE:
            self.indeterminate += 1
            return
        p = _label(predicted)
        if p is None or p is DiagLabel.INDETERMINATE:
            self.parse_failures += 1
            return
        self.counts[CLASSES.index(t), CLASSES.index(p)] += 1

    def __getitem__(self, key: tuple) -> int:
        t, p = key
        return int(self.counts[CLASSES.index(_label(t)), CLASSES.index(_label(p))])

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def truth_total(self, cls_: DiagLabel) -> int:
        return int(self.counts[CLASSES.index(cls_)].sum())

    def to_dict(self) -> dict:
        return {
            "classes": [c.value for c in CLASSES],
            "counts": self.counts.tolist(),
            "indeterminate": self.indeterminate,
            "parse_failures": self.parse_failures,
        }


def f1_per_class(c: Confusion3) -> dict[DiagLabel, float]:
    """One-vs-rest F1; 0 when precision and recall are both 0."""
    out = {}
    for k, cls_ in enumerate(CLASSES):
        tp = int(c.counts[k, k])
        fp = int(c.counts[:, k].sum()) - tp
        fn = int(c.counts[k, :].sum()) - tp
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        out[cls_] = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return out


def macro_f1(c: Confusion3) -> float:
    return float(np.mean(list(f1_per_class(c).values())))


def over_rejection(c: Confusion3) -> float | None:
    """Share of truly valid-alternative steps labeled Incorrect; None if there are none."""
    n = c.truth_total(VA)
    return c[VA, INC] / n if n else None


def over_validation(c: Confusion3) -> float | None:
    """Share of truly incorrect steps labeled Optimal or valid alternative."""
    n = c.truth_total(INC)
    return (c[INC, O] + c[INC, VA]) / n if n else None


def eta_squared(outcome: Sequence[float], groups: Sequence[Hashable]) -> float:
    """One-way SS_between / SS_total; 0 when the outcome has no variance."""
    y = np.asarray(outcome, dtype=float)
    if len(y) != len(groups):
        raise LengthMismatch("outcome and groups differ in length")
    labels = list(dict.fromkeys(groups))
    if len(labels) < 2:
        raise DegenerateGrouping("eta squared needs at least two groups")
    g = np.asarray([labels.index(x) for x in groups])
    grand = y.mean()
    ss_total = float(((y - grand) ** 2).sum())
    if ss_total == 0:
        return 0.0
    ss_between = 0.0
    for k in range(len(labels)):
        part = y[g == k]
        ss_between += len(part) * (part.mean() - grand) ** 2
    return float(min(1.0, max(0.0, ss_between / ss_total)))


@dataclass(frozen=True)
class MWUResult:
    U: float
    p: float
    method: str  # "exact" or "normal"


EXACT_LIMIT = 64


def _midranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(len(values), dtype=float)
    sorted_vals = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def mann_whitney_u(a: Sequence[float], b: Sequence[float]) -> MWUResult:
    """U statistic of ``a`` against ``b`` with a two-sided p-value.

    Ties get midranks. When ``len(a) * len(b) <= 64`` the p-value comes from
    enumerating every split of the pooled ranks; otherwise from the normal
    approximation with tie correction and a 0.5 continuity correction.
    """
    n, m = len(a), len(b)
    if n == 0 or m == 0:
        raise EmptySample("both samples must be non-empty")
    pooled = np.concatenate([np.asarray(a, dtype=float), np.asarray(b, dtype=float)])
    ranks = _midranks(pooled)
    u = float(ranks[:n].sum() - n * (n + 1) / 2)
    mu = n * m / 2
    if n * m <= EXACT_LIMIT:
        obs = abs(u - mu)
        hits = total = 0
        base = n * (n + 1) / 2
        for idx in itertools.combinations(range(n + m), n):
            total += 1
            if abs(ranks[list(idx)].sum() - base - mu) >= obs - 1e-9:
                hits += 1
        return MWUResult(u, hits / total, "exact")
    N = n + m
    _, tie_counts = np.unique(pooled, return_counts=True)
    tie_term = float((tie_counts ** 3 - tie_counts).sum())
    var = n * m / 12 * ((N + 1) - tie_term / (N * (N - 1)))
    if var <= 0:
        return MWUResult(u, 1.0, "normal")
    z = max(abs(u - mu) - 0.5, 0.0) / math.sqrt(var)
    return MWUResult(u, min(1.0, math.erfc(z / math.sqrt(2))), "normal")


def cohens_kappa(r1: Sequence[Hashable], r2: Sequence[Hashable]) -> float:
    if len(r1) != len(r2):
        raise LengthMismatch(f"rater lists differ in length: {len(r1)} vs {len(r2)}")
    if not r1:
        raise LengthMismatch("need at least one rated item")
    n = len(r1)
    agree = sum(x == y for x, y in zip(r1, r2))
    c1, c2 = Counter(r1), Counter(r2)
    chance = sum(c1[k] * c2.get(k, 0) for k in c1)
    if chance == n * n:
        return 1.0
    # integer form, one rounding: (n·agree − Σ c1·c2) / (n² − Σ c1·c2)
    return (n * agree - chance) / (n * n - chance)


@dataclass(frozen=True)
class TierSpec:
    """Upper bounds (inclusive) of the low/medium and near/mid tiers."""

    complexity_bounds: tuple[float, float] = (2, 4)
    complexity_labels: tuple[str, str, str] = ("low", "medium", "high")
    distance_bounds: tuple[float, float] = (2, 3)
    distance_labels: tuple[str, str, str] = ("near", "mid", "far")

    def to_dict(self) -> dict:
        return {
            "complexity_bounds": list(self.complexity_bounds),
            "complexity_labels": list(self.complexity_labels),
            "distance_bounds": list(self.distance_bounds),
            "distance_labels": list(self.distance_labels),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "TierSpec":
        return cls(**{k: tuple(v) for k, v in data.items() if k in cls.__dataclass_fields__})


DEFAULT_TIERS = TierSpec()


def tier_of(value: float, kind: str, spec: TierSpec = DEFAULT_TIERS) -> str:
    """Bucket a complexity or distance value. Complexity 0 counts as low."""
    if value < 0:
        raise ValueError("tier values are non-negative")
    kind = kind.lower()
    if kind == "complexity":
        bounds, labels = spec.complexity_bounds, spec.complexity_labels
    elif kind == "distance":
        bounds, labels = spec.distance_bounds, spec.distance_labels
    else:
        raise ValueError(f"unknown tier kind {kind!r}")
    if value <= bounds[0]:
        return labels[0]
    if value <= bounds[1]:
        return labels[1]
    return labels[2]


# -- report tables ------------------------------------------------------------
# rows are mappings with at least "truth" and "pred" (labels or None) plus the
# grouping keys, e.g. "model", "condition", "complexity", "distance"


def _round(x: float | None, nd: int = 6) -> float | None:
    return None if x is None else round(float(x), nd)


def summarize(rows: Iterable[Mapping], group_by: Sequence[str] = ("model", "condition")) -> list[dict]:
    """Per-group F1, OR, OV and counts, in sorted group order."""
    groups: dict[tuple, Confusion3] = defaultdict(Confusion3)
    for r in rows:
        groups[tuple(r[k] for k in group_by)].add(r["truth"], r.get("pred"))
    def order(key):
        # conditions run Peer, Teacher, Judge; everything else sorts as text
        return tuple((_COND_RANK.get(str(x), 9), str(x)) if g == "condition" else (0, str(x))
                     for g, x in zip(group_by, key))

    out = []
    for key in sorted(groups, key=order):
        c = groups[key]
        f1 = f1_per_class(c)
        row = dict(zip(group_by, key))
        row.update({
            "n": c.total,
            "indeterminate": c.indeterminate,
            "parse_failures": c.parse_failures,
            "f1_optimal": _round(f1[O]),
            "f1_valid_alternative": _round(f1[VA]),
            "f1_incorrect": _round(f1[INC]),
            "macro_f1": _round(macro_f1(c)),
            "over_rejection": _round(over_rejection(c)),
            "over_validation": _round(over_validation(c)),
            "n_valid_alternative": c.truth_total(VA),
            "n_incorrect": c.truth_total(INC),
        })
        out.append(row)
    return out


_COND_SHORT = {"Peer": "P", "Teacher": "T", "Judge": "J"}
_COND_RANK = {"Peer": 0, "Teacher": 1, "Judge": 2}


def results_table(rows: Iterable[Mapping]) -> list[dict]:
    """One row per model: macro F1, OR and OV for each condition (P/T/J)."""
    per = summarize(rows, ("model", "condition"))
    table: dict[str, dict] = {}
    for r in per:
        t = table.setdefault(r["model"], {"model": r["model"]})
        tag = _COND_SHORT.get(str(r["condition"]), str(r["condition"]))
        t[f"F1_{tag}"] = r["macro_f1"]
        t[f"OR_{tag}"] = r["over_rejection"]
        t[f"OV_{tag}"] = r["over_validation"]
        t[f"n_{tag}"] = r["n"]
    return [table[k] for k in sorted(table)]


def tier_table(rows: Iterable[Mapping], kind: str, spec: TierSpec = DEFAULT_TIERS,
               group_by: Sequence[str] = ("model",)) -> list[dict]:
    """OR/OV by model and complexity or distance tier; rows lacking the value are skipped."""
    key = "complexity" if kind.lower() == "complexity" else "distance"
    tagged = []
    for r in rows:
        v = r.get(key)
        if v is None:
            continue
        tagged.append({**r, "tier": tier_of(v, key, spec)})
    labels = spec.complexity_labels if key == "complexity" else spec.distance_labels
    out = summarize(tagged, tuple(group_by) + ("tier",))
    order = {lab: i for i, lab in enumerate(labels)}
    out.sort(key=lambda r: tuple(str(r[g]) for g in group_by) + (order[r["tier"]],))
    return out


def eta_by(rows: Sequence[Mapping], factor: str) -> float:
    """eta squared of per-instance correctness across levels of ``factor``."""
    usable = [r for r in rows if _label(r["truth"]) is not DiagLabel.INDETERMINATE
              and r.get("pred") is not None]
    y = [1.0 if _label(r["pred"]) is _label(r["truth"]) else 0.0 for r in usable]
    return eta_squared(y, [r[factor] for r in usable])


def to_csv(table: Sequence[Mapping]) -> str:
    if not table:
        return ""
    cols: list[str] = []
    for r in table:
        for k in r:
            if k not in cols:
                cols.append(k)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for r in table:
        w.writerow({k: ("" if r.get(k) is None else r.get(k)) for k in cols})
    return buf.getvalue()


def to_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
