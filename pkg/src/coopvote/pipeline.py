"""End-to-end weight derivation and benchmarking.

Predictions on the model-test split are turned into a metric tensor, scored
by two VIKOR stages, played as a bankruptcy game and allocated by each value
concept. The ensemble-test split is only used for the final comparison.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field, fields
from typing import Optional, Sequence

import numpy as np

from . import game as game_mod
from .game import CONCEPTS, ValueConcept, WeightVector, normalize
from .mcdm import class_weights, stage1, stage2
from .metrics import METRICS, argmax_rows, build_confusion, metric_tensor, overall_stats
from .voting import BASELINES, baseline_scores, soft_weighted_vote, uniform

logger = logging.getLogger(__name__)

SPLITS = ("model_test", "ensemble_test")
NON_WEIGHT = "Non-weight"
PROPOSED = "Proposed"
METHOD_COLUMNS = (NON_WEIGHT, "SWV", "RSWV", "BWWV", "QBWWV", "WMV", PROPOSED)


class AlignmentError(ValueError):
    """Classifier files disagree on sample ids or true labels."""

    def __init__(self, message: str, sample_id=None):
        super().__init__(message)
        self.sample_id = sample_id


@dataclass(frozen=True)
class SplitData:
    sample_ids: Sequence[str]
    labels: np.ndarray
    soft: np.ndarray  # samples x m

    def __post_init__(self):
        object.__setattr__(self, "sample_ids", tuple(str(s) for s in self.sample_ids))
        object.__setattr__(self, "labels", np.asarray(self.labels, dtype=np.int64))
        object.__setattr__(self, "soft", np.asarray(self.soft, dtype=float))
        if self.soft.ndim != 2 or self.soft.shape[0] != len(self.sample_ids) or self.labels.shape != (len(self.sample_ids),):
            raise ValueError("sample ids, labels and soft rows must have matching lengths")


@dataclass(frozen=True)
class PredictionBundle:
    name: str
    model_test: SplitData
    ensemble_test: SplitData

    def split(self, which: str) -> SplitData:
        if which not in SPLITS:
            raise ValueError(f"unknown split {which!r}; expected one of {SPLITS}")
        return getattr(self, which)


@dataclass
class EnsembleConfig:
    vikor_v: float = 0.5
    bankruptcy_fraction: float = 0.8
    metrics: list = field(default_factory=lambda: list(METRICS))
    metric_weights: Optional[list] = None
    concepts: list = field(default_factory=lambda: [c.value for c in CONCEPTS])
    selection: str = "best"
    tie_rule: str = "lowest"
    split_ratios: list = field(default_factory=lambda: [0.6, 0.2, 0.2])
    seed: int = 0
    name: str = "dataset"

    def __post_init__(self):
        if not 0.0 <= self.vikor_v <= 1.0:
            raise ValueError(f"vikor_v must lie in [0, 1], got {self.vikor_v}")
        if not 0.0 < self.bankruptcy_fraction <= 1.0:
            raise ValueError(f"bankruptcy_fraction must lie in (0, 1], got {self.bankruptcy_fraction}")
        self.metrics = list(self.metrics)
        bad = [k for k in self.metrics if k not in METRICS]
        if bad or not self.metrics or len(set(self.metrics)) != len(self.metrics):
            raise ValueError(f"metrics must be distinct names from {METRICS}, got {self.metrics}")
        if self.metric_weights is not None:
            self.metric_weights = [float(x) for x in self.metric_weights]
            if len(self.metric_weights) != len(self.metrics) or min(self.metric_weights) <= 0:
                raise ValueError("metric_weights needs one positive weight per metric")
        self.concepts = [ValueConcept(c).value for c in self.concepts]
        if not self.concepts:
            raise ValueError("at least one value concept must be configured")
        # keep the fixed tag order so tie-breaking is well defined
        self.concepts = [c.value for c in CONCEPTS if c.value in self.concepts]
        if self.selection != "best" and self.selection not in self.concepts:
            raise ValueError(f"selection must be 'best' or a configured concept, got {self.selection!r}")
        if self.tie_rule not in ("lowest", "highest"):
            raise ValueError(f"tie_rule must be 'lowest' or 'highest', got {self.tie_rule!r}")
        self.split_ratios = [float(x) for x in self.split_ratios]
        if len(self.split_ratios) != 3 or min(self.split_ratios) <= 0 or abs(sum(self.split_ratios) - 1) > 1e-9:
            raise ValueError(f"split_ratios must be 3 positive reals summing to 1, got {self.split_ratios}")

    @classmethod
    def from_dict(cls, data: dict) -> "EnsembleConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown config keys: {unknown}")
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Derivation:
    """Everything produced while deriving the cooperative-game weights."""

    tensor: object
    class_weights: np.ndarray
    stage1: object
    z: np.ndarray
    game: Optional[game_mod.CoalitionGame]
    allocations: dict
    weights: dict  # concept tag -> WeightVector
    diagnostics: list


@dataclass
class Report:
    dataset: str
    classifiers: list
    n_classes: int
    metrics: list
    config: dict
    selection_split: str
    chosen_concept: str
    method_accuracy: dict
    concept_accuracy: dict
    selection_accuracy: dict
    individual_accuracy: dict
    weights: dict
    evaluation_vector: list
    class_weights: list
    diagnostics: list

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "Report":
        return cls(**data)


def stratified_split(labels, ratios=(0.6, 0.2, 0.2), seed: int = 0) -> tuple:
    """Three disjoint index arrays with per-class sizes proportional to ``ratios``.

    Per-class sizes use largest-remainder rounding (ties go to the earlier
    split); members of each class are shuffled with ``seed`` before cutting.
    """
    labels = np.asarray(labels)
    ratios = np.asarray(ratios, dtype=float)
    if ratios.shape != (3,) or (ratios <= 0).any() or abs(ratios.sum() - 1) > 1e-9:
        raise ValueError(f"ratios must be 3 positive reals summing to 1, got {ratios.tolist()}")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    parts = [[], [], []]
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        exact = ratios * idx.size
        sizes = np.floor(exact).astype(int)
        short = idx.size - sizes.sum()
        order = np.argsort(-(exact - sizes), kind="stable")
        sizes[order[:short]] += 1
        if (sizes == 0).any():
            raise ValueError(f"class {cls!r} has {idx.size} samples, too few to appear in all three splits")
        idx = rng.permutation(idx)
        cuts = np.cumsum(sizes)[:-1]
        for part, chunk in zip(parts, np.split(idx, cuts)):
            part.append(chunk)
    return tuple(np.sort(np.concatenate(p)) for p in parts)


def check_alignment(bundles: Sequence[PredictionBundle], split: str) -> None:
    ref = bundles[0].split(split)
    for b in bundles[1:]:
        cur = b.split(split)
        for k in range(max(len(ref.sample_ids), len(cur.sample_ids))):
            if k >= len(ref.sample_ids) or k >= len(cur.sample_ids):
                sid = cur.sample_ids[k] if k < len(cur.sample_ids) else ref.sample_ids[k]
                raise AlignmentError(f"{split}: {b.name} and {bundles[0].name} cover different samples "
                                     f"(first extra sample id {sid})", sid)
            if cur.sample_ids[k] != ref.sample_ids[k] or cur.labels[k] != ref.labels[k]:
                sid = cur.sample_ids[k]
                raise AlignmentError(f"{split}: {b.name} disagrees with {bundles[0].name} at sample id {sid}", sid)
        if cur.soft.shape[1] != ref.soft.shape[1]:
            raise AlignmentError(f"{split}: {b.name} has {cur.soft.shape[1]} classes, expected {ref.soft.shape[1]}")


def _hard(bundles, split, tie_rule):
    return [argmax_rows(b.split(split).soft, tie_rule) for b in bundles]


def derive_weights(bundles: Sequence[PredictionBundle], cfg: EnsembleConfig,
                   workers: Optional[int] = None) -> Derivation:
    if len(bundles) < 2:
        raise ValueError(f"need at least 2 classifiers, got {len(bundles)}")
    check_alignment(bundles, "model_test")
    split = bundles[0].model_test
    m = split.soft.shape[1]
    n = len(bundles)
    diagnostics = []

    cms = [build_confusion(split.labels, pred, m) for pred in _hard(bundles, "model_test", cfg.tie_rule)]
    tensor = metric_tensor(cms, cfg.metrics)
    p_class = class_weights(np.bincount(split.labels, minlength=m))
    s1 = stage1(tensor, p_class, cfg.vikor_v, workers=workers)
    for k, classes in s1.degenerate.items():
        diagnostics.append(f"degenerate criteria: metric {tensor.metrics[k]} classes {list(classes)}")
    z = stage2(s1, cfg.metric_weights, cfg.vikor_v)

    concepts = [ValueConcept(c) for c in cfg.concepts]
    if n < 3 and ValueConcept.ENPAC in concepts:
        concepts.remove(ValueConcept.ENPAC)
        diagnostics.append("skipped ENPAC: needs at least 3 classifiers")

    if z.sum() <= 0:
        diagnostics.append("evaluation vector is all zero: uniform weights for every concept")
        weights = {c.value: WeightVector(np.full(n, 1.0 / n), c.value, fallback=True) for c in concepts}
        return Derivation(tensor, p_class, s1, z, None, {}, weights, diagnostics)

    game = game_mod.bankruptcy_game(z, cfg.bankruptcy_fraction)
    allocations = game_mod.allocate_all(game, concepts, workers=workers)
    weights = {}
    for c in concepts:
        w = normalize(allocations[c])
        if w.fallback:
            diagnostics.append(f"fallback to uniform weights: {c.value}")
        if w.clamped:
            diagnostics.append(f"negative values clamped: {c.value}")
        weights[c.value] = w
    return Derivation(tensor, p_class, s1, z, game, allocations, weights, diagnostics)


def accuracy(pred, labels) -> float:
    return float(np.mean(np.asarray(pred) == np.asarray(labels)))


def select_value(weights: dict, bundles: Sequence[PredictionBundle], cfg: EnsembleConfig,
                 split: str = "model_test") -> tuple:
    """Chosen concept and per-concept accuracy on ``split``.

    Ties keep the earlier concept in the fixed tag order.
    """
    if not weights:
        raise ValueError("no value concept computed")
    soft = [b.split(split).soft for b in bundles]
    labels = bundles[0].split(split).labels
    scores = {tag: accuracy(soft_weighted_vote(soft, w, cfg.tie_rule), labels) for tag, w in weights.items()}
    order = [c.value for c in CONCEPTS if c.value in weights]
    if cfg.selection != "best":
        return cfg.selection, scores
    best = order[0]
    for tag in order[1:]:
        if scores[tag] > scores[best]:
            best = tag
    return best, scores


def baseline_weight_vectors(bundles: Sequence[PredictionBundle], cfg: EnsembleConfig) -> tuple:
    """Classical rule weights measured on the model-test split, plus diagnostics."""
    split = bundles[0].model_test
    m = split.soft.shape[1]
    stats = [overall_stats(build_confusion(split.labels, p, m)) for p in _hard(bundles, "model_test", cfg.tie_rule)]
    out, diagnostics = {}, []
    for scheme in BASELINES:
        raw = baseline_scores(scheme, stats, m)
        w = normalize(raw, provenance=scheme.value)
        if w.clamped:
            diagnostics.append(f"negative values clamped: {scheme.value}")
        if w.fallback:
            diagnostics.append(f"fallback to uniform weights: {scheme.value}")
        out[scheme.value] = w
    return out, diagnostics


def weight_entry(w: WeightVector, kind: str) -> dict:
    return {"values": [float(x) for x in w.r], "provenance": w.provenance, "kind": kind,
            "fallback": bool(w.fallback), "clamped": bool(w.clamped)}


def evaluate_methods(bundles: Sequence[PredictionBundle], derivation: Derivation, baselines: dict,
                     cfg: EnsembleConfig, chosen: str, selection_scores: dict,
                     extra_diagnostics: Sequence[str] = ()) -> Report:
    check_alignment(bundles, "ensemble_test")
    split = bundles[0].ensemble_test
    soft = [b.ensemble_test.soft for b in bundles]
    labels = split.labels
    n = len(bundles)

    def acc_of(w):
        return accuracy(soft_weighted_vote(soft, w, cfg.tie_rule), labels)

    concept_acc = {tag: acc_of(w) for tag, w in derivation.weights.items()}
    methods = {NON_WEIGHT: acc_of(uniform(n))}
    for scheme in ("SWV", "RSWV", "BWWV", "QBWWV", "WMV"):
        methods[scheme] = acc_of(baselines[scheme])
    methods[PROPOSED] = concept_acc[chosen]

    weights = {"SAV": weight_entry(uniform(n), "baseline")}
    weights.update({tag: weight_entry(w, "baseline") for tag, w in baselines.items()})
    weights.update({tag: weight_entry(w, "concept") for tag, w in derivation.weights.items()})

    return Report(
        dataset=cfg.name,
        classifiers=[b.name for b in bundles],
        n_classes=int(split.soft.shape[1]),
        metrics=list(derivation.tensor.metrics),
        config=cfg.to_dict(),
        selection_split="model_test",
        chosen_concept=chosen,
        method_accuracy=methods,
        concept_accuracy=concept_acc,
        selection_accuracy={k: float(v) for k, v in selection_scores.items()},
        individual_accuracy={b.name: accuracy(argmax_rows(b.ensemble_test.soft, cfg.tie_rule), labels)
                             for b in bundles},
        weights=weights,
        evaluation_vector=[float(x) for x in derivation.z],
        class_weights=[float(x) for x in derivation.class_weights],
        diagnostics=list(derivation.diagnostics) + list(extra_diagnostics),
    )


def run(bundles: Sequence[PredictionBundle], cfg: Optional[EnsembleConfig] = None,
        workers: Optional[int] = None) -> Report:
    """Derive weights, pick a value concept, and benchmark every method."""
    cfg = cfg or EnsembleConfig()
    derivation = derive_weights(bundles, cfg, workers=workers)
    baselines, diag = baseline_weight_vectors(bundles, cfg)
    chosen, scores = select_value(derivation.weights, bundles, cfg)
    logger.info("chosen value concept %s (model-test accuracy %.4f)", chosen, scores[chosen])
    return evaluate_methods(bundles, derivation, baselines, cfg, chosen, scores, diag)
