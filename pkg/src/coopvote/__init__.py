"""Ensemble voting weights from cooperative games over multi-criteria classifier evaluations."""

from .game import (CONCEPTS, Allocation, CoalitionGame, ValueConcept, WeightVector, allocate, allocate_all,
                   bankruptcy_game, normalize, shapley_permutation_oracle)
from .mcdm import class_weights, stage1, stage2, vikor_scores
from .metrics import (METRICS, ConfusionMatrix, argmax_class, build_confusion, metric_tensor, overall_stats,
                      per_class_metrics)
from .pipeline import EnsembleConfig, PredictionBundle, Report, SplitData, derive_weights, run, stratified_split
from .synth import SynthSpec, generate
from .voting import BASELINES, BaselineScheme, baseline_weights, hard_majority_vote, soft_weighted_vote

__version__ = "0.1.0"
