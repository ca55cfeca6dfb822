"""Synthetic tactile-fabric corpus: weaves, pressing gradients, defects.

Textures are products of sines plus optionally blob-smoothed noise; a
radial pressing dome simulates the uneven sensor contact that intensity
adjustment exists to remove; defects are localized structure changes
(soft hole, suppressed yarn band, ridge-shaped wrinkle) that leave every
pixel beyond their extent untouched.

Everything is deterministic: per-sample generators derive from
(corpus seed, sample index), so regeneration is byte-identical and
independent of scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .image import round_half_up, save_image
from .manifest import LABEL_DEFECT_FREE, LABEL_DEFECTIVE, ManifestRow, write_manifest

DEFECT_KINDS = ("hole", "missing_yarn", "wrinkle")


@dataclass(frozen=True)
class WeaveParams:
    freq_x: float  # cycles along rows, per image height
    freq_y: float  # cycles along columns, per image width
    amplitude: float
    base: float
    noise_sigma: float = 0.0
    blob_scale: int = 0  # box-smoothing width in pixels; 0 = white noise
    seed: int = 0

    def __post_init__(self):
        if self.freq_x <= 0 or self.freq_y <= 0:
            raise ValueError("weave frequencies must be positive")
        if self.base - self.amplitude < 0 or self.base + self.amplitude > 255:
            raise ValueError("base +/- amplitude must stay inside [0, 255]")
        if self.noise_sigma < 0 or self.blob_scale < 0:
            raise ValueError("noise_sigma and blob_scale must be >= 0")


def _circular_box_smooth(field: np.ndarray, width: int) -> np.ndarray:
    """Separable box filter with wraparound, exact and allocation-light."""
    out = np.zeros_like(field)
    shifts = range(-(width // 2), width - width // 2)
    for axis in (0, 1):
        out[:] = 0.0
        for s in shifts:
            out += np.roll(field, s, axis=axis)
        field = out / width
        out = np.zeros_like(field)
    return field


def generate_weave(params: WeaveParams, height: int, width: int,
                   phase_x: float = 0.0, phase_y: float = 0.0,
                   swap_axes: bool = False) -> np.ndarray:
    """Product-of-sines texture plus smoothed noise, clamped to uint8.

    pixel(x, y) = base + amplitude * sin(2*pi*fx*x/M + px)
                                   * sin(2*pi*fy*y/N + py) + noise(x, y)

    `phase_x`/`phase_y` translate the texture and `swap_axes` turns it a
    quarter turn (frequencies trade axes); the corpus generator uses both
    to vary samples within a family. Either frequency at or above the
    Nyquist limit of its axis is rejected.
    """
    fx, fy = params.freq_x, params.freq_y
    px, py = phase_x, phase_y
    if swap_axes:
        fx, fy, px, py = fy, fx, py, px
    if fx >= height / 2 or fy >= width / 2:
        raise ValueError("weave frequency at or above the Nyquist limit")
    x = np.arange(height, dtype=np.float64)[:, None]
    y = np.arange(width, dtype=np.float64)[None, :]
    texture = params.base + params.amplitude * (
        np.sin(2 * np.pi * fx * x / height + px)
        * np.sin(2 * np.pi * fy * y / width + py)
    )
    if params.noise_sigma > 0:
        rng = np.random.Generator(np.random.PCG64(params.seed))
        noise = rng.standard_normal((height, width))
        if params.blob_scale > 1:
            noise = _circular_box_smooth(noise, params.blob_scale)
        spread = noise.std()
        if spread > 0:
            texture = texture + noise * (params.noise_sigma / spread)
    return np.clip(round_half_up(texture), 0, 255).astype(np.uint8)


def apply_pressing_gradient(img: np.ndarray, strength: float,
                            center: tuple[float, float] | None = None) -> np.ndarray:
    """Multiply by the radial dome 1 - strength * (r / r_max)^2.

    r_max is the distance from the center to the farthest corner, so that
    corner is scaled by exactly 1 - strength.
    """
    if not 0.0 <= strength <= 1.0:
        raise ValueError("strength must be within [0, 1]")
    arr = np.asarray(img, dtype=np.float64)
    height, width = arr.shape
    cy, cx = center if center is not None else ((height - 1) / 2.0, (width - 1) / 2.0)
    rows = np.arange(height, dtype=np.float64)[:, None] - cy
    cols = np.arange(width, dtype=np.float64)[None, :] - cx
    r_sq = rows**2 + cols**2
    r_max_sq = max(
        cy**2 + cx**2,
        cy**2 + (width - 1 - cx) ** 2,
        (height - 1 - cy) ** 2 + cx**2,
        (height - 1 - cy) ** 2 + (width - 1 - cx) ** 2,
    )
    dome = 1.0 - strength * (r_sq / r_max_sq)
    return np.clip(round_half_up(arr * dome), 0, 255).astype(np.uint8)


@dataclass(frozen=True)
class DefectSpec:
    kind: str
    location: tuple[int, int]
    extent: int
    intensity_delta: float

    def __post_init__(self):
        if self.kind not in DEFECT_KINDS:
            raise ValueError(f"unknown defect kind {self.kind!r}")
        if self.extent < 3:
            raise ValueError("defect extent must be >= 3 pixels")


def inject_defect(img: np.ndarray, spec: DefectSpec, seed: int = 0) -> np.ndarray:
    """Stamp one structural defect; pixels farther than `extent` from the
    defect locus are byte-identical to the input.

    hole          soft-edged disk blended toward the value intensity_delta
                  (locus: the center point)
    missing_yarn  axis-aligned band with texture pulled toward the band
                  mean and shifted by a fraction of intensity_delta
                  (locus: the band's center line; axis chosen by seed)
    wrinkle       additive Gaussian ridge along a seeded-angle line through
                  the location, cut to zero beyond the extent
    """
    arr = np.asarray(img, dtype=np.float64)
    height, width = arr.shape
    row, col = spec.location
    if not (0 <= row < height and 0 <= col < width):
        raise ValueError(f"defect location {spec.location} outside image")
    rng = np.random.Generator(np.random.PCG64(seed))
    rows = np.arange(height, dtype=np.float64)[:, None] - row
    cols = np.arange(width, dtype=np.float64)[None, :] - col
    out = arr.copy()

    if spec.kind == "hole":
        if (row - spec.extent < 0 or row + spec.extent >= height
                or col - spec.extent < 0 or col + spec.extent >= width):
            raise ValueError("hole region extends outside the image")
        dist = np.hypot(rows, cols)
        blend = np.clip(1.0 - (dist / spec.extent) ** 2, 0.0, 1.0)
        target = float(np.clip(spec.intensity_delta, 0, 255))
        out += blend * (target - arr)
    elif spec.kind == "missing_yarn":
        horizontal = bool(rng.integers(0, 2))
        perp = np.abs(rows) if horizontal else np.abs(cols)
        half = spec.extent / 2.0
        taper = np.clip(1.0 - perp / half, 0.0, 1.0)
        band = arr[np.broadcast_to(perp <= half, arr.shape)]
        band_mean = band.mean()
        out += taper * (0.8 * (band_mean - arr) + 0.5 * spec.intensity_delta)
    else:  # wrinkle
        angle = rng.uniform(0.0, np.pi)
        # Perpendicular distance to the line through (row, col) at `angle`.
        perp = np.abs(-np.sin(angle) * rows + np.cos(angle) * cols)
        sigma = max(spec.extent / 4.0, 1.0)
        ridge = spec.intensity_delta * np.exp(-(perp**2) / (2 * sigma**2))
        ridge[perp > spec.extent] = 0.0
        out += ridge

    return np.clip(round_half_up(out), 0, 255).astype(np.uint8)


@dataclass(frozen=True)
class FamilySpec:
    name: str
    weave: WeaveParams
    defect_free: int
    defective: int

    def __post_init__(self):
        if self.defect_free < 1 or self.defective < 1:
            raise ValueError("each family needs at least one sample per label")


@dataclass(frozen=True)
class CorpusSpec:
    families: tuple[FamilySpec, ...]
    height: int = 480
    width: int = 600
    defect_kinds: tuple[str, ...] = DEFECT_KINDS
    seed: int = 0
    press_strength: float = 0.35  # per-sample strength jitters below this

    def __post_init__(self):
        if not self.families:
            raise ValueError("corpus needs at least one family")
        if self.height < 2 or self.width < 2:
            raise ValueError("corpus images must be at least 2x2")
        for kind in self.defect_kinds:
            if kind not in DEFECT_KINDS:
                raise ValueError(f"unknown defect kind {kind!r}")
        if not 0.0 <= self.press_strength <= 1.0:
            raise ValueError("press_strength must be within [0, 1]")


def _render_sample(spec: CorpusSpec, family: FamilySpec, sample_index: int,
                   defective: bool) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(
        np.random.SeedSequence((spec.seed, sample_index))
    ))
    weave = replace(family.weave, seed=int(rng.integers(2**63)))
    img = generate_weave(
        weave, spec.height, spec.width,
        phase_x=rng.uniform(0, 2 * np.pi),
        phase_y=rng.uniform(0, 2 * np.pi),
        swap_axes=bool(rng.integers(0, 2)),
    )
    if spec.press_strength > 0:
        center = (
            (spec.height - 1) / 2.0 * rng.uniform(0.85, 1.15),
            (spec.width - 1) / 2.0 * rng.uniform(0.85, 1.15),
        )
        img = apply_pressing_gradient(
            img, spec.press_strength * rng.uniform(0.7, 1.0), center
        )
    if defective:
        kinds = spec.defect_kinds or DEFECT_KINDS
        kind = kinds[int(rng.integers(len(kinds)))]
        extent = int(min(spec.height, spec.width) * rng.uniform(0.18, 0.30))
        extent = max(extent, 3)
        margin = extent + 1
        location = (
            int(rng.integers(margin, max(spec.height - margin, margin + 1))),
            int(rng.integers(margin, max(spec.width - margin, margin + 1))),
        )
        if kind == "hole":
            # Pull toward a clearly darker or brighter value than the base.
            target = family.weave.base + rng.choice((-1.0, 1.0)) * rng.uniform(90, 125)
            delta = float(np.clip(target, 0, 255))
        else:
            delta = float(rng.choice((-1.0, 1.0)) * rng.uniform(70, 110))
        img = inject_defect(
            img, DefectSpec(kind, location, extent, delta),
            seed=int(rng.integers(2**63)),
        )
    return img


def generate_corpus(spec: CorpusSpec, out_dir) -> Path:
    """Write PGM samples plus manifest.csv; returns the manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    sample_index = 0
    for family in spec.families:
        for label, count in ((LABEL_DEFECT_FREE, family.defect_free),
                             (LABEL_DEFECTIVE, family.defective)):
            for i in range(count):
                img = _render_sample(spec, family, sample_index,
                                     defective=label == LABEL_DEFECTIVE)
                name = f"{family.name}_{label}_{i:03d}.pgm"
                save_image(img, out_dir / name)
                rows.append(ManifestRow(str((out_dir / name).resolve()), family.name, label))
                sample_index += 1
    manifest_path = out_dir / "manifest.csv"
    write_manifest(rows, manifest_path)
    return manifest_path
