"""Classical weighting rules and the hard/soft voting combiners."""
from __future__ import annotations

from enum import Enum
from typing import Sequence

import numpy as np

from .game import WeightVector, normalize
from .metrics import ClassifierStats, argmax_rows

WMV_CLIP = 1e-6
ROW_SUM_TOL = 1e-6


class BaselineScheme(str, Enum):
    SWV = "SWV"
    WMV = "WMV"
    RSWV = "RSWV"
    BWWV = "BWWV"
    QBWWV = "QBWWV"


BASELINES = tuple(BaselineScheme)


def baseline_scores(scheme, stats: Sequence[ClassifierStats], m: int) -> np.ndarray:
    """Raw (unnormalized, possibly negative) scores of a classical weighting rule."""
    scheme = BaselineScheme(scheme)
    if len(stats) < 2:
        raise ValueError("baseline weighting needs at least 2 classifiers")
    acc = np.array([s.accuracy for s in stats])
    err = np.array([s.error_rate for s in stats])

    if scheme is BaselineScheme.SWV:
        return acc
    if scheme is BaselineScheme.WMV:
        a = np.clip(acc, WMV_CLIP, 1 - WMV_CLIP)
        return np.log(a / (1 - a))
    if scheme is BaselineScheme.RSWV:
        sizes = {s.sample_count for s in stats}
        if len(sizes) != 1:
            raise ValueError(f"RSWV needs a common evaluation size, got {sorted(sizes)}")
        # N is the evaluation sample count; reading it as the classifier count
        # would not zero out classifiers at chance accuracy 1/m.
        N = sizes.pop()
        counts = np.array([s.error_count for s in stats], dtype=float)
        return np.maximum(0.0, 1 - m * counts / (N * (m - 1)))

    e_best, e_worst = err.min(), err.max()
    if e_worst == e_best:
        return np.ones(len(stats))
    if scheme is BaselineScheme.BWWV:
        return 1 - (err - e_best) / (e_worst - e_best)
    return ((e_worst - err) / (e_worst - e_best)) ** 2


def baseline_weights(scheme, stats: Sequence[ClassifierStats], m: int) -> WeightVector:
    scheme = BaselineScheme(scheme)
    return normalize(baseline_scores(scheme, stats, m), provenance=scheme.value)


def _weights(r, n: int) -> np.ndarray:
    r = np.asarray(getattr(r, "r", r), dtype=float)
    if r.shape != (n,):
        raise ValueError(f"expected {n} weights, got shape {r.shape}")
    return r


def hard_majority_vote(hard_preds, r, m: int, tie_rule: str = "lowest") -> np.ndarray:
    preds = [np.asarray(p, dtype=np.int64) for p in hard_preds]
    lengths = {p.size for p in preds}
    if len(lengths) != 1:
        raise ValueError(f"hard prediction sequences differ in length: {sorted(lengths)}")
    w = _weights(r, len(preds))
    tally = np.zeros((lengths.pop(), m))
    rows = np.arange(tally.shape[0])
    for wi, p in zip(w, preds):
        tally[rows, p] += wi
    return argmax_rows(tally, tie_rule)


def validate_soft(soft) -> list:
    mats = [np.asarray(s, dtype=float) for s in soft]
    shapes = {s.shape for s in mats}
    if len(shapes) != 1 or mats[0].ndim != 2:
        raise ValueError(f"soft output matrices must share one samples x m shape, got {sorted(shapes)}")
    for i, s in enumerate(mats):
        if (s < 0).any() or (s > 1).any():
            raise ValueError(f"classifier {i}: soft outputs must lie in [0, 1]")
        dev = np.abs(s.sum(axis=1) - 1)
        if (dev > ROW_SUM_TOL).any():
            raise ValueError(f"classifier {i}: row {int(np.argmax(dev))} does not sum to 1")
    return mats


def soft_weighted_vote(soft, r, tie_rule: str = "lowest") -> np.ndarray:
    """argmax over classes of the weight-blended soft outputs.

    Uniform weights give plain simple average voting.
    """
    mats = validate_soft(soft)
    w = _weights(r, len(mats))
    tally = np.zeros_like(mats[0])
    for wi, s in zip(w, mats):
        tally += wi * s
    return argmax_rows(tally, tie_rule)


def uniform(n: int, provenance: str = "SAV") -> WeightVector:
    return WeightVector(np.full(n, 1.0 / n), provenance)
