"""Separable 2D discrete Fourier transform and amplitude-spectrum helpers.

Conventions used everywhere in this package:

* forward transform carries the 1/(M*N) factor:
      F(u, v) = (1/MN) * sum_xy P(x, y) * exp(-2j*pi*(u*x/M + v*y/N))
* the inverse is unscaled, so ``idft2(dft2(p))`` reproduces ``p``; it
  projects onto the real part and reports the largest imaginary residual
  (peak zeroing upstream can break Hermitian symmetry).

Both directions are evaluated as 1D transforms of every row followed by 1D
transforms of every column, each as one matrix product against a cached
DFT matrix, i.e. O(MN(M+N)) work done by BLAS.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=16)
def _dft_matrix(n: int, sign: int) -> np.ndarray:
    k = np.arange(n)
    mat = np.exp(sign * 2j * np.pi * np.outer(k, k) / n)
    mat.setflags(write=False)
    return mat


def dft2(plane: np.ndarray) -> np.ndarray:
    """Forward 2D DFT of a real plane, normalized by 1/(M*N).

    Returns an (M, N) complex128 spectrum.
    """
    p = np.asarray(plane, dtype=np.float64)
    if p.ndim != 2 or p.size == 0:
        raise ValueError("expected a nonempty 2D plane")
    m, n = p.shape
    rows = p @ _dft_matrix(n, -1)
    return (_dft_matrix(m, -1) @ rows) / (m * n)


def idft2(spectrum: np.ndarray) -> tuple[np.ndarray, float]:
    """Unscaled inverse 2D DFT.

    Returns ``(plane, imag_residual)`` where ``plane`` is the real part of
    the inverse and ``imag_residual`` is the maximum absolute imaginary
    component discarded by the projection.
    """
    s = np.asarray(spectrum, dtype=np.complex128)
    if s.ndim != 2 or s.size == 0:
        raise ValueError("expected a nonempty 2D spectrum")
    m, n = s.shape
    rows = s @ _dft_matrix(n, +1)
    full = _dft_matrix(m, +1) @ rows
    residual = float(np.abs(full.imag).max())
    return np.ascontiguousarray(full.real), residual


def amplitude(spectrum: np.ndarray) -> np.ndarray:
    """Element-wise modulus of a spectrum."""
    return np.abs(np.asarray(spectrum, dtype=np.complex128))


def top_k_points(amplitudes: np.ndarray, k: int) -> list[tuple[int, int]]:
    """The k coordinates with the largest amplitude, in descending order.

    Ties are broken by ascending (u, v), so selection is deterministic.
    """
    a = np.asarray(amplitudes, dtype=np.float64)
    if k < 0 or k > a.size:
        raise ValueError(f"k={k} out of range for {a.shape} spectrum")
    n = a.shape[1]
    # Stable sort on the row-major flattening breaks amplitude ties by
    # flat index, which is exactly lexicographic (u, v) order.
    order = np.argsort(-a.ravel(), kind="stable")[:k]
    return [(int(i) // n, int(i) % n) for i in order]


def center_shift_coords(u: int, v: int, m: int, n: int) -> tuple[int, int]:
    """Map spectrum coordinates to the centered layout (DC at the middle)."""
    if not (0 <= u < m and 0 <= v < n):
        raise ValueError(f"coordinates ({u}, {v}) outside {m}x{n} spectrum")
    return (u + m // 2) % m, (v + n // 2) % n
