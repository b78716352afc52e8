"""Readers and writers for every file the command line tool touches.

Prediction files are CSV with header ``sample_id,true_label,p_0,...,p_{m-1}``
and rows in ascending sample id. Manifests, configs, weights, games and
reports are JSON.
"""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .game import CONCEPTS, CoalitionGame, bankruptcy_game
from .pipeline import (METHOD_COLUMNS, AlignmentError, EnsembleConfig, PredictionBundle, Report,
                       SplitData, check_alignment, stratified_split)

ROW_SUM_TOL = 1e-6

# short column names per value concept in csv and md reports
CONCEPT_COLUMNS = {
    "SHAPLEY": "Shapley",
    "BANZHAF": "Banzhaf",
    "SOLIDARITY": "SO",
    "CIS": "CIS",
    "ENSC": "ENSC",
    "ENPAC": "ENPAC",
    "ENBC": "ENBC",
    "CONSENSUS": "CON",
}


class DataError(ValueError):
    """Input data failed validation."""


def _id_key(ids: Sequence[str]):
    try:
        return [int(s) for s in ids]
    except ValueError:
        return list(ids)


def read_predictions(path, m: int) -> tuple:
    """Sample ids, raw label strings and an (samples x m) probability matrix."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"prediction file not found: {path}")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        expected = ["sample_id", "true_label"] + [f"p_{j}" for j in range(m)]
        if header != expected:
            raise DataError(f"{path}: header must be {','.join(expected)}, got {header}")
        ids, labels, rows = [], [], []
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != m + 2:
                raise DataError(f"{path}:{lineno}: expected {m + 2} fields, got {len(rec)}")
            try:
                probs = [float(x) for x in rec[2:]]
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-numeric probability") from None
            ids.append(rec[0])
            labels.append(rec[1])
            rows.append(probs)
    if not ids:
        raise DataError(f"{path}: no rows")
    soft = np.array(rows, dtype=float)
    if not np.isfinite(soft).all() or (soft < 0).any():
        raise DataError(f"{path}: probabilities must be finite and nonnegative")
    sums = soft.sum(axis=1)
    bad = np.abs(sums - 1) > ROW_SUM_TOL
    if bad.any():
        raise DataError(f"{path}: row for sample id {ids[int(np.argmax(bad))]} sums to "
                        f"{sums[bad][0]!r}, not 1")
    soft = soft / sums[:, None]
    keys = _id_key(ids)
    for k in range(1, len(keys)):
        if not keys[k - 1] < keys[k]:
            raise DataError(f"{path}: sample ids not strictly ascending at sample id {ids[k]}")
    return ids, labels, soft


def write_predictions(path, split: SplitData, label_names: Optional[Sequence[str]] = None) -> None:
    m = split.soft.shape[1]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sample_id", "true_label"] + [f"p_{j}" for j in range(m)])
        for sid, lab, row in zip(split.sample_ids, split.labels, split.soft):
            name = label_names[lab] if label_names is not None else str(int(lab))
            w.writerow([sid, name] + [repr(float(x)) for x in row])


def label_index(raw_labels: Sequence[str], m: int, names: Optional[Sequence[str]] = None) -> list:
    """Label order: explicit ``names``, else dense integers 0..m-1, else the sorted unique set."""
    if names is not None:
        names = [str(x) for x in names]
        if len(names) != m or len(set(names)) != m:
            raise DataError(f"manifest labels must list {m} distinct names")
        return names
    uniq = sorted(set(raw_labels))
    if all(lab.isdigit() and str(int(lab)) == lab and int(lab) < m for lab in uniq):
        return [str(j) for j in range(m)]
    if len(uniq) != m:
        raise DataError(f"found {len(uniq)} distinct labels {uniq}, manifest declares {m} classes")
    return uniq


def _to_indices(raw: Sequence[str], names: Sequence[str], path) -> np.ndarray:
    lookup = {name: j for j, name in enumerate(names)}
    out = np.empty(len(raw), dtype=np.int64)
    for k, lab in enumerate(raw):
        if lab not in lookup:
            raise DataError(f"{path}: unknown label {lab!r}")
        out[k] = lookup[lab]
    return out


def read_manifest(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"manifest not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict) or "classes" not in data or "classifiers" not in data:
        raise DataError(f"{path}: manifest needs 'classes' and 'classifiers'")
    m = data["classes"]
    if not isinstance(m, int) or m < 2:
        raise DataError(f"{path}: 'classes' must be an integer >= 2")
    entries = data["classifiers"]
    if not isinstance(entries, list) or len(entries) < 2:
        raise DataError(f"{path}: at least 2 classifiers required, got "
                        f"{len(entries) if isinstance(entries, list) else entries!r}")
    names = [e.get("name") for e in entries]
    if None in names or len(set(names)) != len(names):
        raise DataError(f"{path}: classifier names must be present and unique")
    for e in entries:
        has_pair = "model_test" in e and "ensemble_test" in e
        if not (has_pair or "predictions" in e):
            raise DataError(f"{path}: classifier {e['name']} needs model_test and ensemble_test "
                            f"files, or a single predictions file")
    return data


def load_bundles(manifest: dict, cfg: Optional[EnsembleConfig] = None) -> tuple:
    """Prediction bundles and the label names, in manifest order.

    Paths are taken relative to the working directory. A classifier entry
    may give one ``predictions`` file covering a whole labelled pool; that
    pool is split stratified with the config's ratios and seed, and the
    training part is dropped.
    """
    cfg = cfg or EnsembleConfig()
    m = manifest["classes"]
    raw = []
    for e in manifest["classifiers"]:
        if "predictions" in e:
            raw.append((e["name"], {"pool": (e["predictions"], read_predictions(e["predictions"], m))}))
        else:
            raw.append((e["name"], {s: (e[s], read_predictions(e[s], m)) for s in ("model_test", "ensemble_test")}))
    all_labels = [lab for _, parts in raw for _, (_, labs, _) in parts.values() for lab in labs]
    names = label_index(all_labels, m, manifest.get("labels"))

    bundles = []
    for name, parts in raw:
        splits = {}
        if "pool" in parts:
            path, (ids, labs, soft) = parts["pool"]
            y = _to_indices(labs, names, path)
            _, mt, et = stratified_split(y, cfg.split_ratios, cfg.seed)
            splits["model_test"] = SplitData([ids[k] for k in mt], y[mt], soft[mt])
            splits["ensemble_test"] = SplitData([ids[k] for k in et], y[et], soft[et])
        else:
            for split, (path, (ids, labs, soft)) in parts.items():
                splits[split] = SplitData(ids, _to_indices(labs, names, path), soft)
        bundles.append(PredictionBundle(name, splits["model_test"], splits["ensemble_test"]))
    return bundles, names


def write_manifest(path, m: int, entries: Sequence[dict], labels: Optional[Sequence[str]] = None) -> None:
    data = {"classes": m, "classifiers": list(entries)}
    if labels is not None:
        data["labels"] = list(labels)
    _write_json(path, data)


def read_config(path) -> EnsembleConfig:
    if path is None:
        return EnsembleConfig()
    path = Path(path)
    if not path.is_file():
        raise DataError(f"config not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise DataError(f"{path}: config must be a JSON object")
    try:
        return EnsembleConfig.from_dict(data)
    except (TypeError, ValueError) as exc:
        raise DataError(f"{path}: {exc}") from None


def _write_json(path, data) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(data))


def dumps(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def weights_document(classifiers: Sequence[str], weights: dict, chosen: Optional[str] = None,
                     z: Optional[Sequence[float]] = None, diagnostics: Sequence[str] = ()) -> dict:
    """``weights`` maps tag -> entry dict with values/provenance/kind/fallback/clamped."""
    doc = {"classifiers": list(classifiers), "weights": weights, "chosen": chosen,
           "diagnostics": list(diagnostics)}
    if z is not None:
        doc["evaluation_vector"] = [float(x) for x in z]
    return doc


def write_weights(path, doc: dict) -> None:
    _write_json(path, doc)


def read_weights(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"weights file not found: {path}")
    doc = json.loads(path.read_text())
    if "classifiers" not in doc or "weights" not in doc:
        raise DataError(f"{path}: weights file needs 'classifiers' and 'weights'")
    n = len(doc["classifiers"])
    for tag, entry in doc["weights"].items():
        vals = entry.get("values")
        if not isinstance(vals, list) or len(vals) != n:
            raise DataError(f"{path}: weights for {tag} must list {n} values")
    return doc


def game_from_dict(data: dict) -> CoalitionGame:
    if "table" in data:
        table = np.asarray(data["table"], dtype=float)
        n = int(table.size).bit_length() - 1
        if table.size < 2 or (1 << n) != table.size:
            raise DataError(f"game table length {table.size} is not a power of 2")
        return CoalitionGame(n, table)
    if "demands" in data:
        return bankruptcy_game(data["demands"], float(data.get("fraction", 0.8)))
    raise DataError("game file needs 'demands' (with optional 'fraction') or 'table'")


def game_to_dict(game: CoalitionGame) -> dict:
    data = {"table": [float(x) for x in game.table]}
    if game.demands is not None:
        data["demands"] = [float(x) for x in game.demands]
        data["estate"] = float(game.estate)
    return data


def read_game(path) -> CoalitionGame:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"game file not found: {path}")
    return game_from_dict(json.loads(path.read_text()))


def write_game(path, game: CoalitionGame) -> None:
    _write_json(path, game_to_dict(game))


def _fmt(x) -> str:
    return "" if x is None else f"{x:.4f}"


def _grid(report: Report) -> tuple:
    methods = [report.method_accuracy.get(c) for c in METHOD_COLUMNS]
    concepts = [report.concept_accuracy.get(c.value) for c in CONCEPTS]
    return methods, concepts


def emit_report(report: Report, fmt: str = "json") -> str:
    if fmt == "json":
        return dumps(report.to_dict())
    methods, concepts = _grid(report)
    method_head = ["Data"] + list(METHOD_COLUMNS)
    concept_head = ["Data"] + [CONCEPT_COLUMNS[c.value] for c in CONCEPTS]
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(method_head + concept_head[1:] + ["Chosen"])
        w.writerow([report.dataset] + [_fmt(x) for x in methods + concepts] + [report.chosen_concept])
        return buf.getvalue()
    if fmt == "md":
        def table(head, row):
            lines = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
            lines.append("| " + " | ".join([report.dataset] + [_fmt(x) or "-" for x in row]) + " |")
            return "\n".join(lines)

        return "\n".join([
            "## Accuracy by method",
            "",
            table(method_head, methods),
            "",
            "## Accuracy by value",
            "",
            table(concept_head, concepts),
            "",
            f"Chosen value: {CONCEPT_COLUMNS[report.chosen_concept]} "
            f"(selected on the {report.selection_split} split)",
            "",
        ])
    raise ValueError(f"unknown report format {fmt!r}")


def parse_report(text: str) -> Report:
    return Report.from_dict(json.loads(text))


def check_ids(bundles: Sequence[PredictionBundle]) -> None:
    for split in ("model_test", "ensemble_test"):
        try:
            check_alignment(bundles, split)
        except AlignmentError as exc:
            raise DataError(str(exc)) from None
