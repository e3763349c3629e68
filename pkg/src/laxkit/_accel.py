"""Numba shim.

Setting ``LAXKIT_DISABLE_NUMBA=1`` in the environment (before import) forces
the pure-numpy code paths everywhere. Without numba installed the same
fallback is used automatically.
"""

import os

_FLAG = os.environ.get("LAXKIT_DISABLE_NUMBA", "").strip().lower()
DISABLED_BY_ENV = _FLAG not in ("", "0", "false", "no")

try:
    if DISABLED_BY_ENV:
        raise ImportError("numba disabled by LAXKIT_DISABLE_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def _wrap(fn):
            return fn

        return _wrap


def use_numba() -> bool:
    return HAVE_NUMBA
