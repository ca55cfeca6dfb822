"""Command-line front end for the inspection pipeline.

Subcommands: synth, preprocess, uniformity, split, train, inspect,
evaluate. Every command is deterministic given its config and seeds; no
report carries a timestamp, so reruns are byte-identical.

Exit codes: 0 ok, 2 config/usage error, 3 I/O error, 4 degenerate input,
5 corrupt artifact.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from .classifier import CheckpointError
from .config import ConfigError, RunConfig, load_config
from .ensemble import (
    evaluate,
    inspect,
    load_ensemble,
    report_as_dict,
    save_ensemble,
    train_ensemble,
)
from .image import ImageFormatError, load_image, rgb_to_gray, save_image
from .intensity import DegenerateStretchError, IntensityConfig, adjust_intensity
from .manifest import ManifestError, read_manifest, write_manifest
from .synthfab import generate_corpus
from .uniformity import UniformityConfig, score_image_file, split_by_uniformity
from .classifier import TrainConfig, prepare_input

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_DEGENERATE = 4
EXIT_CORRUPT = 5


def _load_run_config(path) -> RunConfig:
    if path is None:
        return RunConfig(intensity=IntensityConfig(),
                         uniformity=UniformityConfig(), train=TrainConfig())
    return load_config(path)


def _write_json(payload: dict, path) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def cmd_synth(args) -> int:
    cfg = _load_run_config(args.config)
    if cfg.corpus is None:
        raise ConfigError("config does not define a [corpus] section")
    manifest = generate_corpus(cfg.corpus, args.out)
    print(manifest)
    return EXIT_OK


def cmd_preprocess(args) -> int:
    cfg = _load_run_config(args.config)
    img = load_image(args.input)
    if img.ndim == 3:
        img = rgb_to_gray(img)
    save_image(adjust_intensity(img, cfg.intensity), args.output)
    return EXIT_OK


def cmd_uniformity(args) -> int:
    cfg = _load_run_config(args.config)
    rows = read_manifest(args.manifest)
    base = Path(args.manifest).resolve().parent
    samples = []
    per_type: dict[str, list[float]] = {}
    for row in rows:
        report = score_image_file(row.path, cfg.uniformity, cfg.intensity)
        samples.append({
            "path": os.path.relpath(Path(row.path).resolve(), base),
            "fabric_type": row.fabric_type,
            "label": row.label,
            "frequencies": list(report.frequencies),
            "kept_indices": list(report.kept_indices),
            "score": report.score,
        })
        per_type.setdefault(row.fabric_type, []).append(report.score)
    type_means = {t: sum(v) / len(v) for t, v in sorted(per_type.items())}
    if args.json:
        _write_json({"samples": samples, "per_type_mean": type_means}, args.json)
    if args.csv:
        ranking = sorted(type_means.items(), key=lambda kv: (-kv[1], kv[0]))
        with open(args.csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["rank", "fabric_type", "mean_uniformity", "samples"])
            for rank, (fabric_type, mean) in enumerate(ranking, start=1):
                writer.writerow([rank, fabric_type, repr(mean),
                                 len(per_type[fabric_type])])
    return EXIT_OK


def cmd_split(args) -> int:
    cfg = _load_run_config(args.config)
    rows = read_manifest(args.manifest)
    result = split_by_uniformity(rows, args.train_types,
                                 cfg.uniformity, cfg.intensity)
    write_manifest(result.train, args.out_train)
    write_manifest(result.test, args.out_test)
    if args.ranking:
        with open(args.ranking, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["rank", "fabric_type", "mean_uniformity", "samples"])
            for rank, entry in enumerate(result.ranking, start=1):
                writer.writerow([rank, entry.fabric_type,
                                 repr(entry.mean_score), entry.samples])
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _load_run_config(args.config)
    rows = read_manifest(args.manifest)
    if not rows:
        raise ConfigError("training manifest is empty")
    dataset = []
    for row in rows:
        img = load_image(row.path)
        if img.ndim == 3:
            img = rgb_to_gray(img)
        if cfg.preprocess:
            img = adjust_intensity(img, cfg.intensity)
        dataset.append((prepare_input(img, cfg.train.input_side), row.label))
    try:
        ens, logs = train_ensemble(dataset, cfg.train, cfg.ensemble_size,
                                   cfg.base_seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    out = Path(args.out)
    save_ensemble(ens, out, cfg.as_dict())
    for i, log in enumerate(logs):
        with open(out / f"member_{i:02d}_loss.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "learning_rate", "mean_loss"])
            for stats in log.epochs:
                writer.writerow([stats.epoch, repr(stats.learning_rate),
                                 repr(stats.mean_loss)])
    return EXIT_OK


def _config_from_manifest(run_config: dict) -> tuple[TrainConfig, IntensityConfig, bool]:
    train_cfg = TrainConfig(**run_config.get("train", {}))
    intensity_cfg = IntensityConfig(**run_config.get("intensity", {}))
    ens = run_config.get("ensemble", {})
    return train_cfg, intensity_cfg, bool(ens.get("preprocess", True))


def cmd_inspect(args) -> int:
    ens, run_config = load_ensemble(args.model)
    try:
        train_cfg, intensity_cfg, preprocess = _config_from_manifest(run_config)
    except (TypeError, ValueError) as exc:
        raise CheckpointError(f"corrupt run config in ensemble manifest: {exc}") from exc
    img = load_image(args.input)
    verdict = inspect(ens, img, train_cfg, preprocess, intensity_cfg)
    print(json.dumps({
        "decision": verdict.decision,
        "votes": list(verdict.votes),
        "tally": {"defective": verdict.tally[0], "defect_free": verdict.tally[1]},
    }, sort_keys=True))
    return EXIT_OK


def cmd_evaluate(args) -> int:
    ens, run_config = load_ensemble(args.model)
    try:
        train_cfg, intensity_cfg, preprocess = _config_from_manifest(run_config)
    except (TypeError, ValueError) as exc:
        raise CheckpointError(f"corrupt run config in ensemble manifest: {exc}") from exc
    rows = read_manifest(args.manifest)
    if not rows:
        raise ConfigError("evaluation manifest is empty")
    report = evaluate(ens, rows, train_cfg, preprocess, intensity_cfg)
    payload = report_as_dict(report)
    base = Path(args.manifest).resolve().parent
    for entry in payload["errors"]:
        entry["path"] = os.path.relpath(Path(entry["path"]).resolve(), base)
    _write_json(payload, args.report)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["fabric_type", "samples", "correct", "accuracy"])
            for fabric_type, stats in sorted(report.per_type.items()):
                writer.writerow([fabric_type, stats.samples, stats.correct,
                                 repr(stats.accuracy)])
            writer.writerow(["overall", report.overall.samples,
                             report.overall.correct, repr(report.overall.accuracy)])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tactifab",
        description="Tactile fabric inspection pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("preprocess", help="intensity-adjust one image")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.add_argument("--config")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("uniformity", help="score a manifest's samples")
    p.add_argument("--manifest", required=True)
    p.add_argument("--json", help="per-sample report path")
    p.add_argument("--csv", help="per-type ranking path")
    p.add_argument("--config")
    p.set_defaults(func=cmd_uniformity)

    p = sub.add_parser("split", help="uniformity-driven train/test split")
    p.add_argument("--manifest", required=True)
    p.add_argument("--train-types", type=int, required=True)
    p.add_argument("--out-train", required=True)
    p.add_argument("--out-test", required=True)
    p.add_argument("--ranking", help="per-type ranking CSV path")
    p.add_argument("--config")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="train the voting ensemble")
    p.add_argument("--train", dest="manifest", required=True)
    p.add_argument("--out", required=True, help="checkpoint directory")
    p.add_argument("--config")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("inspect", help="verdict for one image as JSON")
    p.add_argument("--model", required=True, help="checkpoint directory")
    p.add_argument("--in", dest="input", required=True)
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("evaluate", help="accuracy report over a manifest")
    p.add_argument("--model", required=True, help="checkpoint directory")
    p.add_argument("--test", dest="manifest", required=True)
    p.add_argument("--report", required=True, help="JSON report path")
    p.add_argument("--csv", help="per-type accuracy table path")
    p.set_defaults(func=cmd_evaluate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else EXIT_CONFIG
    try:
        return args.func(args)
    except (ConfigError, ManifestError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DegenerateStretchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except CheckpointError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CORRUPT
    except ImageFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except FileNotFoundError as exc:
        print(f"error: missing file: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
