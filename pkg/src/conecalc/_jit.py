"""Numba switch.

Set ``CONECALC_DISABLE_JIT=1`` to run every kernel through its pure-numpy
fallback (useful for debugging and for machines without numba).
"""

import os

_flag = os.environ.get("CONECALC_DISABLE_JIT", "0").strip().lower()
JIT_ENABLED = _flag not in ("1", "true", "yes", "on")

if JIT_ENABLED:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is a hard dependency
        JIT_ENABLED = False

if not JIT_ENABLED:

    def njit(func=None, **kwargs):
        if func is not None:
            return func

        def wrapper(f):
            return f

        return wrapper
