"""Optional numba acceleration for the hot integration kernels.

The kernels in :mod:`micropump._kernels` are written as plain scalar loops so
the exact same code runs JIT-compiled or as ordinary Python. Set the
environment variable ``MICROPUMP_DISABLE_NUMBA=1`` before import to force the
pure-Python path (useful for debugging and for the benchmark comparison).
"""

import os

DISABLE_ENV = "MICROPUMP_DISABLE_NUMBA"

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dep, but stay usable
    numba = None
    HAS_NUMBA = False


def _disabled_by_env() -> bool:
    value = os.environ.get(DISABLE_ENV, "").strip().lower()
    return value not in ("", "0", "false", "no")


JIT_ENABLED = HAS_NUMBA and not _disabled_by_env()


def maybe_jit(func=None, **kwargs):
    """Apply ``numba.njit`` when acceleration is enabled, else return ``func``.

    Usable bare (``@maybe_jit``) or with keyword arguments
    (``@maybe_jit(cache=True)``).
    """

    def wrap(f):
        if JIT_ENABLED:
            return numba.njit(f, **kwargs)
        return f

    if func is not None:
        return wrap(func)
    return wrap
