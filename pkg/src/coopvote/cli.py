"""Command line front end.

Exit codes: 0 success, 1 usage error, 2 data validation error.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from . import io as cvio
from .game import CONCEPTS, allocate_all, normalize
from .pipeline import (SPLITS, AlignmentError, baseline_weight_vectors, derive_weights, select_value,
                       weight_entry)
from .pipeline import run as run_pipeline
from .synth import SynthSpec, generate
from .voting import soft_weighted_vote, uniform

log = logging.getLogger("coopvote")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


def _floats(text: str) -> list:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="coopvote", description="Cooperative-game ensemble weights for multi-class classifiers.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic prediction corpus")
    p.add_argument("--samples", type=int, required=True, help="samples per evaluation split")
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--classifiers", type=int, required=True)
    p.add_argument("--class-probs", type=_floats)
    p.add_argument("--skills", type=_floats, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("weights", help="derive voting weights")
    p.add_argument("--manifest", required=True)
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.add_argument("--game-out", help="also write the coalition game")

    p = sub.add_parser("vote", help="apply a weight vector to one split")
    p.add_argument("--manifest", required=True)
    p.add_argument("--weights", required=True)
    p.add_argument("--split", choices=SPLITS, default="ensemble_test")
    p.add_argument("--scheme", help="weight tag to use (default: the chosen concept)")
    p.add_argument("--config")
    p.add_argument("--out", required=True)

    p = sub.add_parser("evaluate", help="benchmark every weighting method")
    p.add_argument("--manifest", required=True)
    p.add_argument("--config")
    p.add_argument("--format", choices=("json", "csv", "md"), default="json")
    p.add_argument("--out", help="output file (default: stdout)")

    p = sub.add_parser("game", help="compute value allocations for a game file")
    p.add_argument("--game", required=True)
    p.add_argument("--out", required=True)
    return parser


def _load(args):
    cfg = cvio.read_config(getattr(args, "config", None))
    manifest = cvio.read_manifest(args.manifest)
    bundles, labels = cvio.load_bundles(manifest, cfg)
    cvio.check_ids(bundles)
    return cfg, bundles, labels


def cmd_synth(args) -> None:
    if len(args.skills) != args.classifiers:
        raise UsageError(f"--skills lists {len(args.skills)} values for {args.classifiers} classifiers")
    probs = args.class_probs or [1.0 / args.classes] * args.classes
    if len(probs) != args.classes:
        raise UsageError(f"--class-probs lists {len(probs)} values for {args.classes} classes")
    spec = SynthSpec(args.samples, tuple(probs), tuple(args.skills), args.seed)
    out = Path(args.out)
    entries = []
    for bundle in generate(spec):
        entry = {"name": bundle.name}
        for split in SPLITS:
            path = out / f"{bundle.name}_{split}.csv"
            cvio.write_predictions(path, bundle.split(split))
            entry[split] = str(path)
        entries.append(entry)
    cvio.write_manifest(out / "manifest.json", spec.m, entries)
    print(out / "manifest.json")


def cmd_weights(args) -> None:
    cfg, bundles, _ = _load(args)
    derivation = derive_weights(bundles, cfg)
    baselines, diag = baseline_weight_vectors(bundles, cfg)
    chosen, _ = select_value(derivation.weights, bundles, cfg)
    entries = {"SAV": weight_entry(uniform(len(bundles)), "baseline")}
    entries.update({k: weight_entry(w, "baseline") for k, w in baselines.items()})
    entries.update({k: weight_entry(w, "concept") for k, w in derivation.weights.items()})
    doc = cvio.weights_document([b.name for b in bundles], entries, chosen, derivation.z,
                                derivation.diagnostics + diag)
    cvio.write_weights(args.out, doc)
    if args.game_out:
        if derivation.game is None:
            raise cvio.DataError("no game to write: the evaluation vector is all zero")
        cvio.write_game(args.game_out, derivation.game)
    for line in doc["diagnostics"]:
        log.warning(line)


def cmd_vote(args) -> None:
    cfg, bundles, labels = _load(args)
    doc = cvio.read_weights(args.weights)
    names = [b.name for b in bundles]
    if doc["classifiers"] != names:
        raise cvio.DataError(f"weights cover classifiers {doc['classifiers']}, manifest lists {names}")
    tag = args.scheme or doc.get("chosen")
    if tag not in doc["weights"]:
        raise cvio.DataError(f"weights file has no entry {tag!r}; available: {sorted(doc['weights'])}")
    r = np.array(doc["weights"][tag]["values"], dtype=float)
    split = [b.split(args.split) for b in bundles]
    pred = soft_weighted_vote([s.soft for s in split], r, cfg.tie_rule)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sample_id", "true_label", "predicted"])
        for sid, t, p in zip(split[0].sample_ids, split[0].labels, pred):
            w.writerow([sid, labels[t], labels[p]])
    acc = float(np.mean(pred == split[0].labels))
    print(f"{tag} {args.split} accuracy {acc:.4f}")


def cmd_evaluate(args) -> None:
    cfg, bundles, _ = _load(args)
    report = run_pipeline(bundles, cfg)
    text = cvio.emit_report(report, args.format)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    for line in report.diagnostics:
        log.warning(line)


def cmd_game(args) -> None:
    game = cvio.read_game(args.game)
    concepts = [c for c in CONCEPTS if not (c.value == "ENPAC" and game.n < 3)]
    allocs = allocate_all(game, concepts)
    doc = {
        "n": game.n,
        "grand_worth": game.grand_worth,
        "values": {c.value: [float(x) for x in a.values] for c, a in allocs.items()},
        "weights": {c.value: weight_entry(normalize(a), "concept") for c, a in allocs.items()},
    }
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    Path(args.out).write_text(cvio.dumps(doc))


COMMANDS = {
    "synth": cmd_synth,
    "weights": cmd_weights,
    "vote": cmd_vote,
    "evaluate": cmd_evaluate,
    "game": cmd_game,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_help())
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s: %(message)s", stream=sys.stderr)
        COMMANDS[args.command](args)
    except UsageError as exc:
        sys.stderr.write(str(exc).rstrip() + "\n")
        return 1
    except AlignmentError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except (cvio.DataError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
