"""Optional numba acceleration for the hot kernels.

Kernels are written once and run on two paths: compiled with numba's nopython
mode, or as plain Python over numpy arrays. The compiled path is the default
whenever numba imports; setting the environment variable
``BUILDERPROC_DISABLE_NUMBA=1`` (or running without numba installed) selects
the pure path. Both paths execute the same source, so results are identical
bit for bit.
"""
from __future__ import annotations

import os

DISABLE_ENV = "BUILDERPROC_DISABLE_NUMBA"

try:
    from numba import njit as _njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAS_NUMBA = False
    _njit = None

JIT_ENABLED = HAS_NUMBA and os.environ.get(DISABLE_ENV, "").lower() not in (
    "1",
    "true",
    "yes",
)


def jit_kernel(fn):
    """Wrap a kernel so both the compiled and plain variants stay reachable.

    The returned object always exposes ``.py_func`` (numba dispatchers do so
    natively; without numba the function is its own fallback). Compilation is
    lazy, so wrapping costs nothing when only the pure path is used.
    """
    if not HAS_NUMBA:
        fn.py_func = fn
        return fn
    return _njit(cache=True)(fn)


def active(kernel):
    """Return the callable for `kernel` under the current settings."""
    if JIT_ENABLED:
        return kernel
    return kernel.py_func
