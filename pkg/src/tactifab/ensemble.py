"""Majority-vote ensemble of independently seeded classifiers.

K models (K odd) are trained on the identical dataset; member i uses seed
``base_seed + i`` for both its initialization and its shuffle order. At
inspection time every member sees the same preprocessed image and the
verdict is the label with a strict majority of votes.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .classifier import (
    CheckpointError,
    ClassifierModel,
    TrainConfig,
    TrainLog,
    init_model,
    load_model,
    predict,
    save_model,
    train,
)
from .image import load_image, rgb_to_gray
from .intensity import IntensityConfig, adjust_intensity
from .manifest import LABEL_DEFECT_FREE, LABEL_DEFECTIVE, ManifestRow


@dataclass
class Ensemble:
    members: list[ClassifierModel]
    base_seed: int

    @property
    def k(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class Verdict:
    votes: tuple[str, ...]
    decision: str
    tally: tuple[int, int]  # (defective votes, defect_free votes)


def train_ensemble(dataset, cfg: TrainConfig, k: int = 5,
                   base_seed: int = 0) -> tuple[Ensemble, list[TrainLog]]:
    """Train k independent members (no parameter sharing) on one dataset."""
    if k < 1 or k % 2 == 0:
        raise ValueError(f"ensemble size must be odd and >= 1, got {k}")
    members = []
    logs = []
    for i in range(k):
        seed = base_seed + i
        member_cfg = TrainConfig(
            epochs=cfg.epochs, batch_size=cfg.batch_size, lr0=cfg.lr0,
            lr_decay=cfg.lr_decay, input_side=cfg.input_side, seed=seed,
        )
        model, log = train(init_model(seed), dataset, member_cfg)
        members.append(model)
        logs.append(log)
    return Ensemble(members=members, base_seed=base_seed), logs


def majority(votes) -> Verdict:
    votes = tuple(votes)
    defective = sum(1 for v in votes if v == LABEL_DEFECTIVE)
    defect_free = len(votes) - defective
    decision = LABEL_DEFECTIVE if defective > len(votes) / 2 else LABEL_DEFECT_FREE
    return Verdict(votes=votes, decision=decision, tally=(defective, defect_free))


def inspect(ensemble: Ensemble, img: np.ndarray, cfg: TrainConfig,
            preprocess: bool = True,
            intensity_cfg: IntensityConfig | None = None) -> Verdict:
    """One verdict for one image; intensity adjustment runs once, outside
    the member loop, so every member votes on the identical pixels."""
    arr = np.asarray(img)
    if arr.ndim == 3:
        arr = rgb_to_gray(arr)
    if preprocess:
        arr = adjust_intensity(arr, intensity_cfg)
    return majority(predict(m, arr, cfg).label for m in ensemble.members)


@dataclass
class TypeStats:
    samples: int = 0
    correct: int = 0
    tp: int = 0  # defective predicted defective
    fp: int = 0
    tn: int = 0
    fn: int = 0

    @property
    def accuracy(self) -> float:
        return self.correct / self.samples if self.samples else 0.0


@dataclass
class EvalReport:
    per_type: dict[str, TypeStats]
    overall: TypeStats
    errors: list[tuple[str, str]]  # (path, message)
    warnings: list[str]


def evaluate(ensemble: Ensemble, rows: list[ManifestRow], cfg: TrainConfig,
             preprocess: bool = True,
             intensity_cfg: IntensityConfig | None = None) -> EvalReport:
    """Accuracy = correctly detected samples / evaluated samples, overall
    and per fabric type, with full confusion counts (positive = defective).

    Unreadable samples are excluded and reported; a type whose samples all
    failed is omitted with a warning.
    """
    per_type: dict[str, TypeStats] = {}
    overall = TypeStats()
    errors: list[tuple[str, str]] = []
    seen_types: set[str] = set()
    for row in rows:
        seen_types.add(row.fabric_type)
        try:
            img = load_image(row.path)
        except (OSError, ValueError) as exc:
            errors.append((row.path, str(exc)))
            continue
        verdict = inspect(ensemble, img, cfg, preprocess, intensity_cfg)
        stats = per_type.setdefault(row.fabric_type, TypeStats())
        for bucket in (stats, overall):
            bucket.samples += 1
            truth_defective = row.label == LABEL_DEFECTIVE
            predicted_defective = verdict.decision == LABEL_DEFECTIVE
            if truth_defective and predicted_defective:
                bucket.tp += 1
            elif truth_defective:
                bucket.fn += 1
            elif predicted_defective:
                bucket.fp += 1
            else:
                bucket.tn += 1
            if predicted_defective == truth_defective:
                bucket.correct += 1
    warnings = [
        f"fabric type {t!r} had no evaluable samples and is omitted"
        for t in sorted(seen_types - set(per_type))
    ]
    return EvalReport(per_type=per_type, overall=overall,
                      errors=errors, warnings=warnings)


def report_as_dict(report: EvalReport) -> dict:
    def stats_dict(s: TypeStats) -> dict:
        return {
            "samples": s.samples, "correct": s.correct,
            "accuracy": s.accuracy,
            "confusion": {"tp": s.tp, "fp": s.fp, "tn": s.tn, "fn": s.fn},
        }

    return {
        "overall": stats_dict(report.overall),
        "per_type": {t: stats_dict(s) for t, s in sorted(report.per_type.items())},
        "errors": [{"path": p, "message": m} for p, m in report.errors],
        "warnings": list(report.warnings),
    }


# --- ensemble checkpoint directory -----------------------------------------

ENSEMBLE_MANIFEST = "ensemble.json"


def config_digest(config: dict) -> str:
    return hashlib.sha256(
        json.dumps(config, sort_keys=True, separators=(",", ":")).encode()
    ).hexdigest()


def save_ensemble(ensemble: Ensemble, directory, run_config: dict) -> Path:
    """Write one checkpoint per member plus a JSON manifest naming them.

    `run_config` is embedded verbatim (and digested) so inspection can
    reconstruct input size and preprocessing settings.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    names = []
    for i, member in enumerate(ensemble.members):
        name = f"member_{i:02d}.ckpt"
        save_model(member, directory / name)
        names.append(name)
    manifest = {
        "k": ensemble.k,
        "base_seed": ensemble.base_seed,
        "members": names,
        "run_config": run_config,
        "config_digest": config_digest(run_config),
    }
    path = directory / ENSEMBLE_MANIFEST
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def load_ensemble(directory) -> tuple[Ensemble, dict]:
    """Load a checkpoint directory. Returns (ensemble, run_config)."""
    directory = Path(directory)
    manifest_path = directory / ENSEMBLE_MANIFEST
    if not manifest_path.exists():
        raise CheckpointError(f"no {ENSEMBLE_MANIFEST} in {directory}")
    try:
        manifest = json.loads(manifest_path.read_text())
        names = manifest["members"]
        base_seed = manifest["base_seed"]
        k = manifest["k"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise CheckpointError(f"corrupt ensemble manifest: {exc}") from exc
    if not isinstance(names, list) or len(names) != k:
        raise CheckpointError("ensemble manifest member list inconsistent with k")
    members = [load_model(directory / name) for name in names]
    return Ensemble(members=members, base_seed=base_seed), manifest.get("run_config", {})
