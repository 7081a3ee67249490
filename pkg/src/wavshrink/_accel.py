"""Numba switch.

Set ``WAVSHRINK_DISABLE_NUMBA=1`` to force the pure-numpy kernels even when
numba is importable.
"""

import os

_disabled = os.environ.get("WAVSHRINK_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if _disabled:
        raise ImportError("disabled by WAVSHRINK_DISABLE_NUMBA")
    from numba import njit

    NUMBA_ENABLED = True
except ImportError:
    NUMBA_ENABLED = False

    def njit(*args, **kwargs):
        # bare @njit and @njit(...) both supported
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def wrapper(f):
            return f

        return wrapper


__all__ = ["NUMBA_ENABLED", "njit"]
