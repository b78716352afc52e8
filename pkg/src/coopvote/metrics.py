"""Confusion matrices and the per-class metric tensor.

Rows of a confusion matrix are true classes, columns are predictions.
Every per-class score comes from the one-vs-rest reduction of that class.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

METRICS = ("ACCURACY", "PPV", "NPV", "TPR", "TNR")


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise ValueError(f"confusion matrix must be square, got shape {counts.shape}")
        if counts.shape[0] < 2:
            raise ValueError("confusion matrix needs at least 2 classes")
        if (counts < 0).any():
            raise ValueError("confusion matrix counts must be nonnegative")
        if counts.sum() < 1:
            raise ValueError("confusion matrix is empty")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @property
    def m(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class BinaryCounts:
    tp: int
    fp: int
    fn: int
    tn: int


@dataclass(frozen=True)
class MetricTensor:
    """values[i, j, k]: score of classifier i on class j under metric k."""

    values: np.ndarray
    metrics: tuple = METRICS

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]

    @property
    def s(self) -> int:
        return self.values.shape[2]


@dataclass(frozen=True)
class ClassifierStats:
    accuracy: float
    error_rate: float
    error_count: int
    sample_count: int


def build_confusion(true_labels: Sequence[int], predicted: Sequence[int], m: int) -> ConfusionMatrix:
    t = np.asarray(true_labels, dtype=np.int64)
    p = np.asarray(predicted, dtype=np.int64)
    if t.shape != p.shape or t.ndim != 1:
        raise ValueError(f"label sequences differ in shape: {t.shape} vs {p.shape}")
    if t.size == 0:
        raise ValueError("label sequences are empty")
    for name, arr in (("true", t), ("predicted", p)):
        bad = (arr < 0) | (arr >= m)
        if bad.any():
            pos = int(np.argmax(bad))
            raise ValueError(f"{name} label {arr[pos]} at position {pos} outside [0, {m})")
    counts = np.zeros((m, m), dtype=np.int64)
    np.add.at(counts, (t, p), 1)
    return ConfusionMatrix(counts)


def binary_counts(cm: ConfusionMatrix, j: int) -> BinaryCounts:
    c = cm.counts
    tp = int(c[j, j])
    fp = int(c[:, j].sum()) - tp
    fn = int(c[j, :].sum()) - tp
    return BinaryCounts(tp, fp, fn, cm.total - tp - fp - fn)


def _ratio(num: int, den: int) -> float:
    # 0/0 is scored as 0
    return num / den if den else 0.0


def per_class_metrics(cm: ConfusionMatrix) -> np.ndarray:
    """m x 5 table in METRICS order."""
    out = np.empty((cm.m, len(METRICS)))
    for j in range(cm.m):
        b = binary_counts(cm, j)
        out[j] = (
            _ratio(b.tp + b.tn, cm.total),
            _ratio(b.tp, b.tp + b.fp),
            _ratio(b.tn, b.tn + b.fn),
            _ratio(b.tp, b.tp + b.fn),
            _ratio(b.tn, b.tn + b.fp),
        )
    return out


def metric_tensor(cms: Sequence[ConfusionMatrix], metrics: Sequence[str] = METRICS) -> MetricTensor:
    if len(cms) < 2:
        raise ValueError("metric tensor needs at least 2 classifiers")
    ms = {cm.m for cm in cms}
    if len(ms) != 1:
        raise ValueError(f"classifiers disagree on class count: {sorted(ms)}")
    unknown = [k for k in metrics if k not in METRICS]
    if unknown or not metrics:
        raise ValueError(f"unknown or empty metric selection: {list(metrics)}")
    cols = [METRICS.index(k) for k in metrics]
    values = np.stack([per_class_metrics(cm)[:, cols] for cm in cms])
    return MetricTensor(values, tuple(metrics))


def overall_stats(cm: ConfusionMatrix) -> ClassifierStats:
    trace = int(np.trace(cm.counts))
    acc = trace / cm.total
    return ClassifierStats(acc, 1.0 - acc, cm.total - trace, cm.total)


def argmax_class(soft_row, tie_rule: str = "lowest") -> int:
    row = np.asarray(soft_row, dtype=float)
    if row.size == 0:
        raise ValueError("cannot take argmax of an empty row")
    return int(argmax_rows(row[None, :], tie_rule)[0])


def argmax_rows(rows: np.ndarray, tie_rule: str = "lowest") -> np.ndarray:
    """Row-wise argmax with exact ties resolved by ``tie_rule``."""
    rows = np.asarray(rows, dtype=float)
    if tie_rule == "lowest":
        return np.argmax(rows, axis=1)
    if tie_rule == "highest":
        m = rows.shape[1]
        return m - 1 - np.argmax(rows[:, ::-1], axis=1)
    raise ValueError(f"unknown tie rule {tie_rule!r}")
