import json

import numpy as np
import pytest

from coopvote import io as cvio
from coopvote.cli import run as cli
from coopvote.game import bankruptcy_game
from coopvote.pipeline import METHOD_COLUMNS, EnsembleConfig, SplitData, run, stratified_split
from coopvote.synth import SynthSpec, generate


@pytest.fixture
def corpus(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    code = cli(["synth", "--samples", "300", "--classes", "3", "--classifiers", "3",
                "--class-probs", "0.5,0.3,0.2", "--skills", "0.9,0.4,0.2", "--seed", "1", "--out", "data"])
    assert code == 0
    return tmp_path


def test_prediction_round_trip(tmp_path):
    b = generate(SynthSpec(50, (0.5, 0.5), (0.7,), seed=3))[0]
    cvio.write_predictions(tmp_path / "p.csv", b.model_test)
    ids, labels, soft = cvio.read_predictions(tmp_path / "p.csv", 2)
    assert tuple(ids) == b.model_test.sample_ids
    assert labels == [str(x) for x in b.model_test.labels]
    np.testing.assert_allclose(soft, b.model_test.soft, rtol=0, atol=1e-15)


def _write_csv(path, rows, m=2):
    head = "sample_id,true_label," + ",".join(f"p_{j}" for j in range(m))
    path.write_text(head + "\n" + "\n".join(rows) + "\n")


def test_prediction_renormalization_and_rejection(tmp_path):
    p = tmp_path / "p.csv"
    _write_csv(p, ["1,0,0.6000004,0.4", "2,1,0.3,0.7"])
    _, _, soft = cvio.read_predictions(p, 2)
    np.testing.assert_allclose(soft.sum(axis=1), 1.0, atol=1e-15)
    _write_csv(p, ["1,0,0.6,0.5"])
    with pytest.raises(cvio.DataError, match="sample id 1"):
        cvio.read_predictions(p, 2)
    _write_csv(p, ["2,0,0.5,0.5", "1,0,0.5,0.5"])
    with pytest.raises(cvio.DataError, match="ascending"):
        cvio.read_predictions(p, 2)
    _write_csv(p, ["1,0,-0.5,1.5"])
    with pytest.raises(cvio.DataError):
        cvio.read_predictions(p, 2)
    p.write_text("id,label,a,b\n1,0,0.5,0.5\n")
    with pytest.raises(cvio.DataError, match="header"):
        cvio.read_predictions(p, 2)
    with pytest.raises(cvio.DataError, match="not found"):
        cvio.read_predictions(tmp_path / "missing.csv", 2)


def test_numeric_ids_sort_numerically(tmp_path):
    p = tmp_path / "p.csv"
    _write_csv(p, ["9,0,0.5,0.5", "10,1,0.5,0.5"])
    ids, _, _ = cvio.read_predictions(p, 2)
    assert ids == ["9", "10"]


def test_label_index():
    assert cvio.label_index(["1", "0", "1"], 2) == ["0", "1"]
    assert cvio.label_index(["cat", "dog"], 2) == ["cat", "dog"]
    assert cvio.label_index(["x"], 2, names=["y", "x"]) == ["y", "x"]
    with pytest.raises(cvio.DataError):
        cvio.label_index(["a", "b", "c"], 2)


def test_game_round_trip(tmp_path):
    g = bankruptcy_game([100, 200, 300])
    cvio.write_game(tmp_path / "g.json", g)
    back = cvio.read_game(tmp_path / "g.json")
    np.testing.assert_array_equal(back.table, g.table)
    assert cvio.game_from_dict({"demands": [1, 2], "fraction": 0.5}).estate == 1.5
    with pytest.raises(cvio.DataError):
        cvio.game_from_dict({"table": [0, 1, 2]})


def test_report_json_round_trip_is_exact():
    rep = run(generate(SynthSpec(200, (0.5, 0.3, 0.2), (0.8, 0.4, 0.1), seed=2)), EnsembleConfig())
    assert cvio.parse_report(cvio.emit_report(rep, "json")) == rep


def test_csv_and_md_grids():
    rep = run(generate(SynthSpec(200, (0.5, 0.3, 0.2), (0.8, 0.4, 0.1), seed=2)), EnsembleConfig(name="toy"))
    lines = cvio.emit_report(rep, "csv").splitlines()
    head, row = lines[0].split(","), lines[1].split(",")
    assert head[:8] == ["Data"] + list(METHOD_COLUMNS)
    assert head[8:16] == ["Shapley", "Banzhaf", "SO", "CIS", "ENSC", "ENPAC", "ENBC", "CON"]
    assert row[0] == "toy" and row[-1] == rep.chosen_concept
    assert all(len(x.split(".")[1]) == 4 for x in row[1:-1])
    md = cvio.emit_report(rep, "md")
    assert "| Data | Non-weight | SWV | RSWV | BWWV | QBWWV | WMV | Proposed |" in md
    assert "| Data | Shapley | Banzhaf | SO | CIS | ENSC | ENPAC | ENBC | CON |" in md
    with pytest.raises(ValueError):
        cvio.emit_report(rep, "xml")


def test_cli_evaluate_happy_path(corpus):
    (corpus / "cfg.json").write_text(json.dumps({"seed": 3, "name": "synthetic"}))
    code = cli(["evaluate", "--manifest", "data/manifest.json", "--config", "cfg.json", "--out", "report.json"])
    assert code == 0
    rep = cvio.parse_report((corpus / "report.json").read_text())
    assert rep.dataset == "synthetic"
    assert all(0 <= a <= 1 for a in rep.method_accuracy.values())


def test_cli_evaluate_is_byte_identical(corpus, capsys):
    for fmt in ("json", "csv", "md"):
        assert cli(["evaluate", "--manifest", "data/manifest.json", "--format", fmt, "--out", f"a.{fmt}"]) == 0
        assert cli(["evaluate", "--manifest", "data/manifest.json", "--format", fmt, "--out", f"b.{fmt}"]) == 0
        assert (corpus / f"a.{fmt}").read_bytes() == (corpus / f"b.{fmt}").read_bytes()
    capsys.readouterr()
    assert cli(["evaluate", "--manifest", "data/manifest.json", "--format", "md"]) == 0
    assert capsys.readouterr().out == (corpus / "a.md").read_text()


def test_cli_weights_vote_and_game(corpus, capsys):
    assert cli(["weights", "--manifest", "data/manifest.json", "--out", "w.json", "--game-out", "g.json"]) == 0
    doc = cvio.read_weights(corpus / "w.json")
    assert doc["classifiers"] == ["clf0", "clf1", "clf2"]
    assert {"SAV", "SWV", "SHAPLEY", "CONSENSUS"} <= set(doc["weights"])
    assert cli(["vote", "--manifest", "data/manifest.json", "--weights", "w.json", "--out", "v.csv"]) == 0
    out = capsys.readouterr().out
    assert out.startswith(doc["chosen"])
    lines = (corpus / "v.csv").read_text().splitlines()
    assert lines[0] == "sample_id,true_label,predicted" and len(lines) == 301
    assert cli(["vote", "--manifest", "data/manifest.json", "--weights", "w.json", "--scheme", "SAV",
                "--split", "model_test", "--out", "v2.csv"]) == 0
    assert cli(["game", "--game", "g.json", "--out", "alloc.json"]) == 0
    alloc = json.loads((corpus / "alloc.json").read_text())
    np.testing.assert_allclose(alloc["weights"]["SHAPLEY"]["values"], doc["weights"]["SHAPLEY"]["values"],
                               atol=1e-12)


def test_cli_unknown_subcommand(capsys):
    assert cli(["frobnicate"]) == 1
    assert "usage" in capsys.readouterr().err
    assert cli([]) == 1
    assert cli(["evaluate"]) == 1


def test_cli_missing_file_names_path(corpus, capsys):
    (corpus / "data" / "clf1_ensemble_test.csv").unlink()
    assert cli(["evaluate", "--manifest", "data/manifest.json"]) == 2
    assert "clf1_ensemble_test.csv" in capsys.readouterr().err


def test_cli_one_classifier(corpus, capsys):
    m = json.loads((corpus / "data" / "manifest.json").read_text())
    m["classifiers"] = m["classifiers"][:1]
    (corpus / "one.json").write_text(json.dumps(m))
    assert cli(["weights", "--manifest", "one.json", "--out", "w.json"]) == 2
    assert "at least 2" in capsys.readouterr().err


def test_cli_misaligned_ids(corpus, capsys):
    path = corpus / "data" / "clf2_model_test.csv"
    lines = path.read_text().splitlines()
    fields = lines[7].split(",")
    fields[1] = str((int(fields[1]) + 1) % 3)
    lines[7] = ",".join(fields)
    path.write_text("\n".join(lines) + "\n")
    assert cli(["evaluate", "--manifest", "data/manifest.json"]) == 2
    assert f"sample id {fields[0]}" in capsys.readouterr().err


def test_cli_unknown_config_key(corpus, capsys):
    (corpus / "cfg.json").write_text(json.dumps({"vikor": 0.5}))
    assert cli(["evaluate", "--manifest", "data/manifest.json", "--config", "cfg.json"]) == 2
    assert "unknown config keys" in capsys.readouterr().err


def test_pool_manifest_is_split(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    bundles = generate(SynthSpec(500, (0.6, 0.4), (0.8, 0.3), seed=0))
    entries = []
    for b in bundles:
        cvio.write_predictions(f"{b.name}.csv", b.model_test, label_names=["neg", "pos"])
        entries.append({"name": b.name, "predictions": f"{b.name}.csv"})
    cvio.write_manifest("m.json", 2, entries, labels=["neg", "pos"])
    loaded, names = cvio.load_bundles(cvio.read_manifest("m.json"), EnsembleConfig())
    assert names == ["neg", "pos"]
    _, mt, et = stratified_split(bundles[0].model_test.labels, (0.6, 0.2, 0.2), 0)
    assert loaded[0].model_test.sample_ids == tuple(bundles[0].model_test.sample_ids[k] for k in mt)
    assert loaded[1].ensemble_test.sample_ids == tuple(bundles[1].model_test.sample_ids[k] for k in et)
    np.testing.assert_array_equal(loaded[1].ensemble_test.labels, bundles[1].model_test.labels[et])
    assert set(loaded[0].model_test.sample_ids).isdisjoint(loaded[0].ensemble_test.sample_ids)


def test_weights_file_validation(tmp_path):
    (tmp_path / "w.json").write_text(json.dumps({"classifiers": ["a", "b"], "weights": {"X": {"values": [1.0]}}}))
    with pytest.raises(cvio.DataError):
        cvio.read_weights(tmp_path / "w.json")


def test_split_data_shape_check():
    with pytest.raises(ValueError):
        SplitData(["1", "2"], [0], np.ones((2, 2)) / 2)
