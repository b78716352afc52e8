"""VIKOR compromise scoring and its two-stage use on classifier metrics.

Stage one runs VIKOR once per metric with classifiers as alternatives and
classes as criteria. Stage two runs it again over the inverted stage-one
scores with metrics as criteria, yielding one evaluation per classifier.
All criteria are benefit-type: the ideal value is the column maximum.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .metrics import MetricTensor


@dataclass(frozen=True)
class VikorScores:
    S: np.ndarray
    R: np.ndarray
    Q: np.ndarray
    # criteria whose column range is zero (they contribute nothing)
    degenerate: tuple = ()
    s_degenerate: bool = False
    r_degenerate: bool = False


@dataclass(frozen=True)
class StageOneScores:
    y: np.ndarray  # n x s
    Q: np.ndarray  # n x s, raw stage-one Q before inversion
    degenerate: dict = field(default_factory=dict)  # metric index -> degenerate classes


def _safe_div(num, den):
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    out = np.zeros(np.broadcast(num, den).shape)
    np.divide(num, den, out=out, where=den != 0)
    return out


def class_weights(class_counts: Sequence[int]) -> np.ndarray:
    """Imbalance-aware criteria weights ``m * exp(-m * share_j)``.

    Rare classes get larger weights; the output only depends on class shares.
    """
    w = np.asarray(class_counts, dtype=float)
    if w.ndim != 1 or w.size < 2:
        raise ValueError("class_weights needs counts for at least 2 classes")
    if (w < 1).any():
        raise ValueError(f"class counts must be >= 1, got {w.tolist()}")
    m = w.size
    return m * np.exp(-m * (w / w.sum()))


def vikor_scores(values, weights, v: float = 0.5) -> VikorScores:
    """Group utility S, individual regret R and compromise index Q.

    ``values`` is alternatives x criteria. Any fraction whose denominator is
    zero evaluates to 0, so all-equal alternatives get Q = 0.
    """
    a = np.asarray(values, dtype=float)
    p = np.asarray(weights, dtype=float)
    if a.ndim != 2 or a.shape[0] < 2 or a.shape[1] < 1:
        raise ValueError(f"decision matrix must be alternatives(>=2) x criteria(>=1), got {a.shape}")
    if p.shape != (a.shape[1],):
        raise ValueError(f"expected {a.shape[1]} criteria weights, got shape {p.shape}")
    if not (np.isfinite(a).all() and np.isfinite(p).all()):
        raise ValueError("decision matrix and weights must be finite")
    if (p <= 0).any():
        raise ValueError("criteria weights must be positive")
    if not 0.0 <= v <= 1.0:
        raise ValueError(f"strategy weight v must lie in [0, 1], got {v}")

    best = a.max(axis=0)
    worst = a.min(axis=0)
    span = best - worst
    regret = p * _safe_div(best - a, span)
    S = regret.sum(axis=1)
    R = regret.max(axis=1)
    s_star, s_minus = S.min(), S.max()
    r_star, r_minus = R.min(), R.max()
    Q = v * _safe_div(S - s_star, s_minus - s_star) + (1 - v) * _safe_div(R - r_star, r_minus - r_star)
    return VikorScores(
        S, R, Q,
        degenerate=tuple(int(j) for j in np.flatnonzero(span == 0)),
        s_degenerate=bool(s_minus == s_star),
        r_degenerate=bool(r_minus == r_star),
    )


def invert(Q: np.ndarray) -> np.ndarray:
    """Turn a smaller-is-better Q into a larger-is-better score with the same spread."""
    return (Q.max() + Q.min()) - Q


def stage1(tensor: MetricTensor, p_class, v: float = 0.5, workers: Optional[int] = None) -> StageOneScores:
    values = tensor.values

    def run(k):
        return vikor_scores(values[:, :, k], p_class, v)

    ks = range(tensor.s)
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(run, ks))
    else:
        results = [run(k) for k in ks]

    Q = np.column_stack([r.Q for r in results])
    y = np.column_stack([invert(r.Q) for r in results])
    degenerate = {k: r.degenerate for k, r in zip(ks, results) if r.degenerate}
    return StageOneScores(y, Q, degenerate)


def stage2(y, p_metric=None, v: float = 0.5) -> np.ndarray:
    """Evaluation vector z from stage-one scores (classifiers x metrics)."""
    y = np.asarray(getattr(y, "y", y), dtype=float)
    if p_metric is None:
        p_metric = np.ones(y.shape[1])
    z = invert(vikor_scores(y, p_metric, v).Q)
    # inversion of values in [0, 1] cannot go negative beyond rounding
    return np.maximum(z, 0.0)
