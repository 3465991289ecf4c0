"""Backend selection for the hot kernels.

Numba is used when it is importable and ``METACOMB_DISABLE_NUMBA`` is unset
(or ``0``). Setting the variable to any other value forces the pure-numpy
path. The choice is made once at import time.
"""

import os

_flag = os.environ.get("METACOMB_DISABLE_NUMBA", "").strip().lower()
_disabled = _flag not in ("", "0", "false", "no")

try:
    if _disabled:
        raise ImportError("numba disabled by METACOMB_DISABLE_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        # bare @njit and @njit(...) both return the undecorated function
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda fn: fn


BACKEND = "numba" if HAVE_NUMBA else "numpy"
