"""Reproducible synthetic prediction bundles.

Each classifier's soft row is uniform noise plus a boost ``b`` on the true
class, renormalized: ``(u_j + b * [j == y]) / (sum(u) + b)``. ``b = 0`` is a
coin flip over classes; larger ``b`` means a more accurate classifier.

Randomness comes from numpy's PCG64 generator seeded through ``SeedSequence``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .pipeline import PredictionBundle, SPLITS, SplitData


@dataclass(frozen=True)
class SynthSpec:
    samples: int  # per split
    class_probs: tuple
    skills: tuple
    seed: int = 0

    def __post_init__(self):
        probs = np.asarray(self.class_probs, dtype=float)
        m = probs.size
        if m < 2:
            raise ValueError("need at least 2 classes")
        if (probs < 0).any() or abs(probs.sum() - 1) > 1e-9:
            raise ValueError(f"class_probs must lie on the simplex, got {list(self.class_probs)}")
        if self.samples < 10 * m:
            raise ValueError(f"need at least 10 * m = {10 * m} samples per split, got {self.samples}")
        if len(self.skills) < 1 or any(b < 0 for b in self.skills):
            raise ValueError(f"skills must be nonnegative, got {list(self.skills)}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def m(self) -> int:
        return len(self.class_probs)


def soft_rows(rng: np.random.Generator, labels: np.ndarray, m: int, boost: float) -> np.ndarray:
    u = rng.random((labels.size, m))
    u[np.arange(labels.size), labels] += boost
    return u / u.sum(axis=1, keepdims=True)


def generate(spec: SynthSpec, names: Sequence[str] = None) -> list:
    """One PredictionBundle per classifier covering both evaluation splits."""
    n = len(spec.skills)
    names = list(names) if names is not None else [f"clf{i}" for i in range(n)]
    if len(names) != n:
        raise ValueError("one name per classifier required")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(spec.seed)))
    m = spec.m
    per_split = {}
    offset = 0
    for split in SPLITS:
        labels = rng.choice(m, size=spec.samples, p=np.asarray(spec.class_probs, dtype=float))
        ids = [str(offset + k) for k in range(spec.samples)]
        offset += spec.samples
        per_split[split] = (ids, labels, [soft_rows(rng, labels, m, b) for b in spec.skills])

    bundles = []
    for i, name in enumerate(names):
        splits = {s: SplitData(ids, labels, soft[i]) for s, (ids, labels, soft) in per_split.items()}
        bundles.append(PredictionBundle(name, splits["model_test"], splits["ensemble_test"]))
    return bundles
