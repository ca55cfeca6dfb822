"""Kernel backend selection.

The hot convolution kernels have two implementations: numba @njit loops
(default whenever numba imports) and a pure-numpy im2col path. Set
``TACTIFAB_PURE_NUMPY=1`` to force the numpy path; ``tactifab.layers``
reads the decision once at import. ``benchmarks/bench_kernels.py`` compares
the two.
"""

from __future__ import annotations

import os

ENV_FLAG = "TACTIFAB_PURE_NUMPY"


def pure_numpy_requested() -> bool:
    return os.environ.get(ENV_FLAG, "").strip().lower() in {"1", "true", "yes", "on"}


def numba_available() -> bool:
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


USE_NUMBA = numba_available() and not pure_numpy_requested()
BACKEND = "numba" if USE_NUMBA else "numpy"
