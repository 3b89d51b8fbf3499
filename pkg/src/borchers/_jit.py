"""Optional numba acceleration.

Set ``BORCHERS_DISABLE_JIT=1`` to force the pure numpy/Python kernels.  The
flag is read once at import time; both code paths stay importable so they can
be compared side by side (see ``benchmarks/bench_kernels.py``).
"""

from __future__ import annotations

import os

_disabled = os.environ.get("BORCHERS_DISABLE_JIT", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    from numba import njit as _njit
    from numba.extending import register_jitable as _register_jitable

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _njit = None
    _register_jitable = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not _disabled


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise the identity decorator."""
    if _njit is None:
        if args and callable(args[0]):
            return args[0]
        return lambda fn: fn
    return _njit(*args, **kwargs)


def register_jitable(fn):
    """Plain Python function that jitted callers may also inline."""
    return fn if _register_jitable is None else _register_jitable(fn)
