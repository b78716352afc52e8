import numpy as np
import pytest

from coopvote.game import CONCEPTS, ValueConcept
from coopvote.pipeline import (METHOD_COLUMNS, PROPOSED, AlignmentError, EnsembleConfig, PredictionBundle,
                               Report, SplitData, derive_weights, run, select_value, stratified_split)
from coopvote.synth import SynthSpec, generate


def test_stratified_split_sizes():
    labels = np.array([0] * 5 + [1] * 5)
    parts = stratified_split(labels, (0.6, 0.2, 0.2), seed=0)
    assert [len(p) for p in parts] == [6, 2, 2]
    for p in parts:
        counts = np.bincount(labels[p], minlength=2)
        assert counts[0] == counts[1]
    assert sorted(np.concatenate(parts).tolist()) == list(range(10))


def test_stratified_split_per_class_counts():
    labels = np.array([0] * 5 + [1] * 5)
    train, mt, et = stratified_split(labels, (0.6, 0.2, 0.2), seed=3)
    assert np.bincount(labels[train]).tolist() == [3, 3]
    assert np.bincount(labels[mt]).tolist() == [1, 1]
    assert np.bincount(labels[et]).tolist() == [1, 1]


def test_stratified_split_deterministic_and_seeded():
    labels = np.random.default_rng(0).integers(0, 3, 300)
    a = stratified_split(labels, seed=7)
    b = stratified_split(labels, seed=7)
    c = stratified_split(labels, seed=8)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x, y)
    assert any(not np.array_equal(x, y) for x, y in zip(a, c))


def test_stratified_split_rejects():
    with pytest.raises(ValueError):
        stratified_split([0, 1] * 10, (1.0, 0.0, 0.0))
    with pytest.raises(ValueError):
        stratified_split([0, 1] * 10, (0.5, 0.2, 0.2))
    with pytest.raises(ValueError, match="too few"):
        stratified_split([0, 0, 1, 1, 1, 1, 1, 1], (0.6, 0.2, 0.2))


def bundles_for(skills, samples=600, seed=0, probs=(0.5, 0.3, 0.2)):
    return generate(SynthSpec(samples, probs, tuple(skills), seed))


def test_identical_classifiers_get_uniform_weights():
    base = bundles_for([1.0])[0]
    bundles = [PredictionBundle(f"c{i}", base.model_test, base.ensemble_test) for i in range(4)]
    d = derive_weights(bundles, EnsembleConfig())
    for w in d.weights.values():
        np.testing.assert_allclose(w.r, 0.25, atol=1e-12)
    rep = run(bundles)
    assert len(set(rep.method_accuracy.values())) == 1


def test_dominant_classifier_gets_largest_weight():
    bundles = bundles_for([6.0, 0.4, 0.4, 0.4])
    d = derive_weights(bundles, EnsembleConfig())
    assert d.z.argmax() == 0 and d.z[0] > d.z[1:].max()
    for tag, w in d.weights.items():
        assert w.r[0] > w.r[1:].max(), tag


def test_two_classifiers_skip_enpac():
    bundles = bundles_for([2.0, 0.5])
    d = derive_weights(bundles, EnsembleConfig())
    assert ValueConcept.ENPAC.value not in d.weights
    assert any("ENPAC" in msg for msg in d.diagnostics)
    rep = run(bundles)
    assert ValueConcept.ENPAC.value not in rep.concept_accuracy


def test_select_value_ties_keep_tag_order():
    bundles = bundles_for([1.0, 1.0, 1.0])
    w = np.full(3, 1 / 3)
    weights = {"CIS": w, "SHAPLEY": w, "CONSENSUS": w}
    chosen, scores = select_value(weights, bundles, EnsembleConfig())
    assert chosen == "SHAPLEY"
    assert len(set(scores.values())) == 1


def test_select_value_fixed_choice():
    bundles = bundles_for([3.0, 0.2, 0.2])
    cfg = EnsembleConfig(selection="CIS")
    rep = run(bundles, cfg)
    assert rep.chosen_concept == "CIS"
    assert rep.method_accuracy[PROPOSED] == rep.concept_accuracy["CIS"]


def test_best_selection_maximizes_model_test_accuracy():
    rep = run(bundles_for([3.0, 1.0, 0.5, 0.2], seed=4))
    best = max(rep.selection_accuracy.values())
    assert rep.selection_accuracy[rep.chosen_concept] == best
    first = next(c.value for c in CONCEPTS if rep.selection_accuracy.get(c.value) == best)
    assert rep.chosen_concept == first


def test_all_zero_evaluation_vector_degrades_to_uniform():
    base = bundles_for([0.0])[0]
    bundles = [PredictionBundle(f"c{i}", base.model_test, base.ensemble_test) for i in range(3)]
    d = derive_weights(bundles, EnsembleConfig())
    np.testing.assert_array_equal(d.z, 0.0)
    assert d.game is None
    assert all(w.fallback for w in d.weights.values())
    rep = run(bundles)
    assert rep.method_accuracy[PROPOSED] == rep.method_accuracy["Non-weight"]


def test_classifier_order_invariance():
    bundles = bundles_for([2.0, 0.7, 1.1, 0.3], seed=5)
    perm = [2, 0, 3, 1]
    a = derive_weights(bundles, EnsembleConfig())
    b = derive_weights([bundles[i] for i in perm], EnsembleConfig())
    np.testing.assert_allclose(b.z, a.z[perm], atol=1e-12)
    for tag in a.weights:
        np.testing.assert_allclose(b.weights[tag].r, a.weights[tag].r[perm], atol=1e-12)


def test_report_shape():
    rep = run(bundles_for([2.0, 1.0, 0.5]))
    assert tuple(rep.method_accuracy) == METHOD_COLUMNS
    assert list(rep.concept_accuracy) == [c.value for c in CONCEPTS]
    assert rep.selection_split == "model_test"
    for entry in rep.weights.values():
        assert sum(entry["values"]) == pytest.approx(1, abs=1e-12)
    assert Report.from_dict(rep.to_dict()) == rep


def test_misaligned_ids_name_the_sample():
    a, b = bundles_for([1.0, 1.0])
    ids = list(b.model_test.sample_ids)
    ids[5] = "bogus"
    bad = PredictionBundle("b", SplitData(ids, b.model_test.labels, b.model_test.soft), b.ensemble_test)
    with pytest.raises(AlignmentError, match="bogus") as info:
        derive_weights([a, bad], EnsembleConfig())
    assert info.value.sample_id == "bogus"


def test_needs_two_classifiers():
    with pytest.raises(ValueError, match="at least 2"):
        derive_weights(bundles_for([1.0]), EnsembleConfig())


@pytest.mark.parametrize("kwargs", [
    {"vikor_v": 1.5},
    {"bankruptcy_fraction": 0.0},
    {"metrics": ["F1"]},
    {"metric_weights": [1.0]},
    {"concepts": ["NUCLEOLUS"]},
    {"concepts": []},
    {"selection": "ENBC", "concepts": ["SHAPLEY"]},
    {"tie_rule": "random"},
    {"split_ratios": [0.5, 0.5]},
])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        EnsembleConfig(**kwargs)


def test_config_dict_round_trip_and_unknown_keys():
    cfg = EnsembleConfig(vikor_v=0.3, concepts=["ENBC", "SHAPLEY"], seed=9)
    assert cfg.concepts == ["SHAPLEY", "ENBC"]
    assert EnsembleConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ValueError, match="unknown config keys"):
        EnsembleConfig.from_dict({"vikor_v": 0.5, "voting": "soft"})


def test_metric_subset_and_weights_change_z():
    bundles = bundles_for([0.8, 0.5, 0.2])
    full = derive_weights(bundles, EnsembleConfig())
    sub = derive_weights(bundles, EnsembleConfig(metrics=["TPR", "PPV"], metric_weights=[3.0, 1.0]))
    assert sub.tensor.values.shape[2] == 2
    assert not np.allclose(full.z, sub.z)


def test_single_concept_returned_unconditionally():
    bundles = bundles_for([0.8, 0.3, 0.1])
    chosen, scores = select_value({"ENSC": np.array([0.0, 0.0, 1.0])}, bundles, EnsembleConfig())
    assert chosen == "ENSC" and list(scores) == ["ENSC"]
