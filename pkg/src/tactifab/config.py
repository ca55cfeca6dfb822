"""Run configuration files: ``key = value`` lines under [section] headers.

Sections mirror the module configs and default to exactly their defaults:

    [intensity] peaks_to_remove, target_mean, mirror_peaks
    [uniformity] window, stride, threshold_divisor, trim_q
    [train] epochs, batch_size, lr0, lr_decay, input_side, seed
    [ensemble] members, base_seed, preprocess
    [corpus] height, width, seed, press_strength, defect_kinds, families
    [family:<name>] freq_x, freq_y, amplitude, base, noise_sigma,
                    blob_scale, defect_free, defective

Unknown sections or keys are rejected with the offending line number.
'#' and ';' start comments; blank lines are ignored.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .classifier import TrainConfig
from .intensity import IntensityConfig
from .synthfab import CorpusSpec, FamilySpec, WeaveParams
from .uniformity import UniformityConfig


class ConfigError(ValueError):
    """Malformed or unknown configuration input."""


@dataclass(frozen=True)
class RunConfig:
    intensity: IntensityConfig
    uniformity: UniformityConfig
    train: TrainConfig
    ensemble_size: int = 5
    base_seed: int = 0
    preprocess: bool = True
    corpus: CorpusSpec | None = None

    def as_dict(self) -> dict:
        """JSON-friendly view of the settings that shape a trained model."""
        return {
            "intensity": {
                "peaks_to_remove": self.intensity.peaks_to_remove,
                "target_mean": self.intensity.target_mean,
                "mirror_peaks": self.intensity.mirror_peaks,
            },
            "uniformity": {
                "window": self.uniformity.window,
                "stride": self.uniformity.stride,
                "threshold_divisor": self.uniformity.threshold_divisor,
                "trim_q": self.uniformity.trim_q,
            },
            "train": {
                "epochs": self.train.epochs,
                "batch_size": self.train.batch_size,
                "lr0": self.train.lr0,
                "lr_decay": self.train.lr_decay,
                "input_side": self.train.input_side,
                "seed": self.train.seed,
            },
            "ensemble": {
                "members": self.ensemble_size,
                "base_seed": self.base_seed,
                "preprocess": self.preprocess,
            },
        }


_SECTION_KEYS = {
    "intensity": {"peaks_to_remove": int, "target_mean": float, "mirror_peaks": bool},
    "uniformity": {"window": int, "stride": int, "threshold_divisor": float,
                   "trim_q": int},
    "train": {"epochs": int, "batch_size": int, "lr0": float, "lr_decay": float,
              "input_side": int, "seed": int},
    "ensemble": {"members": int, "base_seed": int, "preprocess": bool},
    "corpus": {"height": int, "width": int, "seed": int, "press_strength": float,
               "defect_kinds": str, "families": str},
}
_FAMILY_KEYS = {"freq_x": float, "freq_y": float, "amplitude": float, "base": float,
                "noise_sigma": float, "blob_scale": int,
                "defect_free": int, "defective": int}


def _coerce(raw: str, to_type, line_no: int):
    raw = raw.strip()
    try:
        if to_type is bool:
            lowered = raw.lower()
            if lowered in {"true", "yes", "on", "1"}:
                return True
            if lowered in {"false", "no", "off", "0"}:
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        return to_type(raw)
    except ValueError as exc:
        raise ConfigError(f"line {line_no}: {exc}") from exc


def _parse_sections(text: str) -> dict[str, dict[str, tuple[str, int]]]:
    sections: dict[str, dict[str, tuple[str, int]]] = {}
    current = None
    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].split(";", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if not current:
                raise ConfigError(f"line {line_no}: empty section name")
            sections.setdefault(current, {})
            continue
        if "=" not in line:
            raise ConfigError(f"line {line_no}: expected 'key = value', got {raw_line!r}")
        if current is None:
            raise ConfigError(f"line {line_no}: key outside any [section]")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {line_no}: empty key")
        if key in sections[current]:
            raise ConfigError(f"line {line_no}: duplicate key {key!r}")
        sections[current][key] = (value, line_no)
    return sections


def _typed_section(sections, name, schema) -> dict:
    values = {}
    for key, (raw, line_no) in sections.get(name, {}).items():
        if key not in schema:
            raise ConfigError(f"line {line_no}: unknown key {key!r} in [{name}]")
        values[key] = _coerce(raw, schema[key], line_no)
    return values


def parse_config(text: str) -> RunConfig:
    sections = _parse_sections(text)
    for name in sections:
        if name not in _SECTION_KEYS and not name.startswith("family:"):
            first_line = min(line for _, line in sections[name].values()) \
                if sections[name] else 0
            raise ConfigError(f"line {first_line}: unknown section [{name}]")

    try:
        intensity = IntensityConfig(**_typed_section(sections, "intensity",
                                                     _SECTION_KEYS["intensity"]))
        uniformity = UniformityConfig(**_typed_section(sections, "uniformity",
                                                       _SECTION_KEYS["uniformity"]))
        train = TrainConfig(**_typed_section(sections, "train",
                                             _SECTION_KEYS["train"]))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    ens = _typed_section(sections, "ensemble", _SECTION_KEYS["ensemble"])

    corpus = None
    corpus_values = _typed_section(sections, "corpus", _SECTION_KEYS["corpus"])
    family_names = [n.strip() for n in corpus_values.pop("families", "").split(",")
                    if n.strip()]
    if family_names or "corpus" in sections:
        if not family_names:
            raise ConfigError("[corpus] present but names no families")
        kinds = corpus_values.pop("defect_kinds", "")
        kind_tuple = tuple(k.strip() for k in kinds.split(",") if k.strip()) \
            or CorpusSpec.__dataclass_fields__["defect_kinds"].default
        families = []
        for fam in family_names:
            section_name = f"family:{fam}"
            if section_name not in sections:
                raise ConfigError(f"missing [{section_name}] for family {fam!r}")
            fam_values = _typed_section(sections, section_name, _FAMILY_KEYS)
            try:
                counts = (fam_values.pop("defect_free", 1),
                          fam_values.pop("defective", 1))
                families.append(FamilySpec(fam, WeaveParams(**fam_values), *counts))
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"[{section_name}]: {exc}") from exc
        for section_name in sections:
            if section_name.startswith("family:") \
                    and section_name[len("family:"):] not in family_names:
                raise ConfigError(f"[{section_name}] not listed under families")
        try:
            corpus = CorpusSpec(families=tuple(families),
                                defect_kinds=kind_tuple, **corpus_values)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[corpus]: {exc}") from exc
    else:
        for section_name in sections:
            if section_name.startswith("family:"):
                raise ConfigError(f"[{section_name}] appears without a [corpus] section")

    try:
        return RunConfig(
            intensity=intensity, uniformity=uniformity, train=train,
            ensemble_size=ens.get("members", 5),
            base_seed=ens.get("base_seed", 0),
            preprocess=ens.get("preprocess", True),
            corpus=corpus,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        return parse_config(text)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
