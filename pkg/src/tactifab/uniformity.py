"""Texture-frequency measurement and uniformity-driven dataset splitting.

A fixed grid of square blocks is cut from the image. Each block gets a
scalar texture frequency: the amplitude spectrum with its DC bin removed
is reduced to the few strongest points whose cumulative amplitude stays
within ``sum / threshold_divisor``, and the frequency is their
amplitude-weighted mean distance from the spectrum center. The image-level
uniformity is a trimmed mean over blocks: drop the q highest and q lowest
frequencies, average the rest.

Higher scores mean a finer, more regular texture. The dataset split sends
the fabric types with the highest mean score (over their defect-free
samples) to the training set; irregular, blotchy types stay out of it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .image import load_image, rgb_to_gray
from .intensity import IntensityConfig, adjust_intensity
from .manifest import LABEL_DEFECT_FREE, ManifestRow
from .spectral import amplitude, dft2


@dataclass(frozen=True)
class UniformityConfig:
    window: int = 360
    stride: int = 120
    threshold_divisor: float = 40.0
    trim_q: int = 2

    def __post_init__(self):
        if self.window < 1 or self.stride < 1:
            raise ValueError("window and stride must be positive")
        if self.threshold_divisor <= 0:
            raise ValueError("threshold_divisor must be > 0")
        if self.trim_q < 0:
            raise ValueError("trim_q must be >= 0")


def block_origins(height: int, width: int, cfg: UniformityConfig) -> list[tuple[int, int]]:
    """Top-left corners of the extraction grid, row-major."""
    if cfg.window > min(height, width):
        raise ValueError(
            f"window {cfg.window} larger than image {height}x{width}"
        )
    rows = range(0, height - cfg.window + 1, cfg.stride)
    cols = range(0, width - cfg.window + 1, cfg.stride)
    return [(r, c) for r in rows for c in cols]


def extract_blocks(img: np.ndarray, cfg: UniformityConfig | None = None) -> list[np.ndarray]:
    """Copy out one window-sized block per grid origin."""
    cfg = cfg or UniformityConfig()
    arr = np.asarray(img)
    w = cfg.window
    return [arr[r : r + w, c : c + w].copy() for r, c in block_origins(*arr.shape, cfg)]


@dataclass(frozen=True)
class BlockFrequency:
    value: float
    featureless: bool = False


def block_texture_frequency(block: np.ndarray, cfg: UniformityConfig | None = None) -> BlockFrequency:
    """Scalar dominant-frequency measure of one square block.

    Steps: amplitude spectrum; DC bin zeroed (the single most concentrated
    low-frequency component); threshold = remaining sum / divisor; take
    points in descending amplitude while the running sum stays within the
    threshold, but always at least one; return the weighted mean distance
    of those points from the centered spectrum's middle.
    """
    cfg = cfg or UniformityConfig()
    arr = np.asarray(block, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError("block must be square")
    m, n = arr.shape
    w = amplitude(dft2(arr))
    dc = w[0, 0]
    w[0, 0] = 0.0
    total = w.sum()
    # A block whose energy sat entirely in the DC bin leaves only transform
    # dust behind; call it featureless rather than measuring noise.
    if total <= 1e-9 * max(1.0, dc):
        return BlockFrequency(0.0, featureless=True)
    threshold = total / cfg.threshold_divisor

    flat = w.ravel()
    order = np.argsort(-flat, kind="stable")  # ties -> ascending (u, v)
    sorted_amps = flat[order]
    cumulative = np.cumsum(sorted_amps)
    t = int(np.searchsorted(cumulative, threshold, side="right"))
    t = max(t, 1)  # the dominant point always participates

    selected = order[:t]
    u = selected // n
    v = selected % n
    # Signed frequency offsets, i.e. centered coordinates minus the center.
    du = (u + m // 2) % m - m // 2
    dv = (v + n // 2) % n - n // 2
    distances = np.hypot(du.astype(np.float64), dv.astype(np.float64))
    weights = sorted_amps[:t] / sorted_amps[:t].sum()
    return BlockFrequency(float(np.dot(weights, distances)))


@dataclass(frozen=True)
class UniformityReport:
    frequencies: tuple[float, ...]
    kept_indices: tuple[int, ...]
    score: float
    featureless_blocks: tuple[int, ...] = ()


def trimmed_kept_indices(values, q: int) -> list[int]:
    """Indices that survive dropping the q highest and q lowest values.

    Ranking ties break by index, so the dropped set is deterministic.
    Returned indices are ascending.
    """
    count = len(values)
    if count <= 2 * q:
        raise ValueError(
            f"insufficient blocks: {count} extracted, trim q={q} "
            f"needs more than {2 * q}"
        )
    ranked = sorted(range(count), key=lambda i: (values[i], i))
    return sorted(ranked[q : count - q])


def measure_uniformity(img: np.ndarray, cfg: UniformityConfig | None = None) -> UniformityReport:
    """Trimmed mean of per-block texture frequencies."""
    cfg = cfg or UniformityConfig()
    results = [block_texture_frequency(b, cfg) for b in extract_blocks(img, cfg)]
    kept = trimmed_kept_indices([r.value for r in results], cfg.trim_q)
    score = sum(results[i].value for i in kept) / len(kept)
    return UniformityReport(
        frequencies=tuple(r.value for r in results),
        kept_indices=tuple(kept),
        score=score,
        featureless_blocks=tuple(i for i, r in enumerate(results) if r.featureless),
    )


@dataclass(frozen=True)
class TypeRank:
    fabric_type: str
    mean_score: float
    samples: int


@dataclass(frozen=True)
class SplitResult:
    train: list[ManifestRow]
    test: list[ManifestRow]
    ranking: list[TypeRank]  # descending mean uniformity


def score_image_file(path, cfg: UniformityConfig | None = None,
                     intensity_cfg: IntensityConfig | None = None) -> UniformityReport:
    """Load, intensity-adjust, and measure one sample.

    Uniformity is always measured on the adjusted image: preprocessing runs
    before any uniformity-based selection in the pipeline.
    """
    img = load_image(path)
    if img.ndim == 3:
        img = rgb_to_gray(img)
    return measure_uniformity(adjust_intensity(img, intensity_cfg), cfg)


def split_by_uniformity(rows: list[ManifestRow], n_train_types: int,
                        cfg: UniformityConfig | None = None,
                        intensity_cfg: IntensityConfig | None = None) -> SplitResult:
    """Partition a manifest by per-type mean uniformity of defect-free samples.

    The n_train_types types with the highest mean go to the training
    manifest, the rest to the test manifest; ties break by ascending type
    identifier. Row order within each side is preserved.
    """
    if not rows:
        raise ValueError("empty manifest")
    types = sorted({r.fabric_type for r in rows})
    if not 1 <= n_train_types < len(types):
        raise ValueError(
            f"n_train_types={n_train_types} must be in [1, {len(types) - 1}] "
            f"for {len(types)} fabric types"
        )
    ranking = []
    for fabric_type in types:
        clean = [r for r in rows
                 if r.fabric_type == fabric_type and r.label == LABEL_DEFECT_FREE]
        if not clean:
            raise ValueError(f"fabric type {fabric_type!r} has no defect-free samples")
        scores = [score_image_file(r.path, cfg, intensity_cfg).score for r in clean]
        ranking.append(TypeRank(fabric_type, math.fsum(scores) / len(scores), len(clean)))
    ranking.sort(key=lambda t: (-t.mean_score, t.fabric_type))
    train_types = {t.fabric_type for t in ranking[:n_train_types]}
    train = [r for r in rows if r.fabric_type in train_types]
    test = [r for r in rows if r.fabric_type not in train_types]
    return SplitResult(train=train, test=test, ranking=ranking)
