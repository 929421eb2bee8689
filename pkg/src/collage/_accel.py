"""Numba toggle for the hot kernels.

Set COLLAGE_NO_NUMBA=1 to force the pure-numpy code paths. The flag is read
once at import time; everything downstream branches on NUMBA_ENABLED.
"""

import os

_OFF = {"1", "true", "yes", "on"}

NUMBA_ENABLED = os.environ.get("COLLAGE_NO_NUMBA", "").strip().lower() not in _OFF

if NUMBA_ENABLED:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is a declared dependency
        NUMBA_ENABLED = False

if not NUMBA_ENABLED:

    def njit(*args, **kwargs):
        """No-op stand-in so @njit-decorated helpers stay importable."""
        if args and callable(args[0]):
            return args[0]

        def deco(fn):
            return fn

        return deco
