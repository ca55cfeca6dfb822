"""Shared oracles for the test suite."""

from __future__ import annotations

import numpy as np


def central_difference(f, x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Gradient of scalar f(x) by central differences, element by element."""
    grad = np.zeros_like(x, dtype=np.float64)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = f(x)
        flat[i] = orig - h
        fm = f(x)
        flat[i] = orig
        gflat[i] = (fp - fm) / (2.0 * h)
    return grad


def max_relative_error(analytic: np.ndarray, numeric: np.ndarray,
                       floor: float = 1e-4) -> float:
    """max |a - n| / max(|a|, |n|, floor); floor keeps near-zero gradients
    from inflating the ratio past finite-difference resolution."""
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
    return float((np.abs(a - n) / denom).max())


def reference_dft2(plane: np.ndarray) -> np.ndarray:
    """Direct O((MN)^2) evaluation of the forward transform definition.

    Independent of the package's separable path; only usable on tiny planes.
    """
    p = np.asarray(plane, dtype=np.float64)
    m, n = p.shape
    out = np.zeros((m, n), dtype=np.complex128)
    for u in range(m):
        for v in range(n):
            acc = 0.0 + 0.0j
            for x in range(m):
                for y in range(n):
                    acc += p[x, y] * np.exp(-2j * np.pi * (u * x / m + v * y / n))
            out[u, v] = acc / (m * n)
    return out
