"""Intensity adjustment: spectral peak removal, linear stretch, mean scaling.

The pipeline evens out the radial brightness falloff left by pressing a
tactile sensor onto fabric: the dominant low-frequency bins (which carry
that falloff plus the strongest weave carrier) are zeroed in the Fourier
domain, the reconstruction is stretched to the full 0..255 range, and the
result is rescaled to a common target mean.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .image import rgb_to_gray, round_half_up
from .spectral import amplitude, dft2, idft2, top_k_points


class DegenerateStretchError(ValueError):
    """Constant plane: linear stretching is undefined, image uninspectable."""


@dataclass(frozen=True)
class IntensityConfig:
    peaks_to_remove: int = 5
    target_mean: float = 90.0
    # Zeroing only the literal top-k bins breaks Hermitian symmetry and
    # leaves a complex inverse; mirroring zeroes each conjugate partner too.
    mirror_peaks: bool = True

    def __post_init__(self):
        if self.peaks_to_remove < 0:
            raise ValueError("peaks_to_remove must be >= 0")
        if not 0.0 < self.target_mean < 255.0:
            raise ValueError("target_mean must lie strictly inside (0, 255)")


def remove_dominant_peaks(spectrum: np.ndarray, cfg: IntensityConfig) -> np.ndarray:
    """Zero the k largest-amplitude bins (and their mirrors if configured).

    The DC bin competes like any other -- it usually is the largest and is
    exactly the component the adjustment wants gone.
    """
    s = np.array(spectrum, dtype=np.complex128, copy=True)
    m, n = s.shape
    if cfg.peaks_to_remove == 0:
        return s
    for u, v in top_k_points(amplitude(s), cfg.peaks_to_remove):
        s[u, v] = 0.0
        if cfg.mirror_peaks:
            s[(m - u) % m, (n - v) % n] = 0.0
    return s


def linear_stretch(plane: np.ndarray) -> np.ndarray:
    """Affinely map values so the output spans exactly [0, 255].

    A plane that is constant to machine precision (e.g. the transform dust
    left after zeroing the only occupied bin) has no meaningful contrast to
    stretch and is rejected.
    """
    p = np.asarray(plane, dtype=np.float64)
    p_min = p.min()
    p_max = p.max()
    if p_max - p_min <= 1e-9 * max(1.0, abs(p_max), abs(p_min)):
        raise DegenerateStretchError("degenerate stretch: plane is constant")
    return (p - p_min) / (p_max - p_min) * 255.0


def normalize_mean(plane: np.ndarray, target: float) -> np.ndarray:
    """Scale values so the mean hits `target`, clamping into [0, 255].

    The mean lands on `target` exactly only when no value clamps, i.e.
    whenever ``target / mean <= 1``.
    """
    p = np.asarray(plane, dtype=np.float64)
    mean = p.mean()
    if mean <= 0.0:
        raise ValueError("cannot normalize a plane with nonpositive mean")
    return np.clip(p * (target / mean), 0.0, 255.0)


def adjust_intensity(img: np.ndarray, cfg: IntensityConfig | None = None) -> np.ndarray:
    """Full adjustment: gray -> DFT -> peak removal -> inverse -> stretch
    -> mean scaling -> 8-bit quantization.

    Deterministic for a fixed input and config; the single rounding step
    happens at the very end.
    """
    cfg = cfg or IntensityConfig()
    arr = np.asarray(img)
    gray = rgb_to_gray(arr) if arr.ndim == 3 else arr
    if gray.ndim != 2 or gray.shape[0] < 2 or gray.shape[1] < 2:
        raise ValueError("image must be at least 2x2")
    spectrum = dft2(gray.astype(np.float64))
    plane, _ = idft2(remove_dominant_peaks(spectrum, cfg))
    stretched = linear_stretch(plane)
    scaled = normalize_mean(stretched, cfg.target_mean)
    return np.clip(round_half_up(scaled), 0, 255).astype(np.uint8)
