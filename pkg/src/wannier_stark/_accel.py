"""Numba switch.

Kernels are written in the numba-compatible subset of Python/numpy. When
``WSL_DISABLE_NUMBA`` is set (or numba is missing) the same functions run
interpreted, which is slow but gives an independent code path for
benchmarks and debugging.
"""
import os

DISABLE_ENV = "WSL_DISABLE_NUMBA"


def _disabled_by_env():
    return os.environ.get(DISABLE_ENV, "").strip().lower() in ("1", "true", "yes", "on")


try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

USE_NUMBA = numba is not None and not _disabled_by_env()


def jit(func):
    """``numba.njit(cache=True, nogil=True)`` or the identity."""
    if USE_NUMBA:
        return numba.njit(cache=True, nogil=True)(func)
    return func


def backend():
    return "numba" if USE_NUMBA else "python"
