"""Numba switch.

Kernels in :mod:`cryamabe.kernels` come in two flavours: a numba ``@njit``
version and a pure-numpy fallback.  Set ``CRYAMABE_NUMBA=0`` in the
environment to force the fallback (numba is also skipped automatically when
it cannot be imported).
"""
import os

try:
    import numba
    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    _HAVE_NUMBA = False

USE_NUMBA = _HAVE_NUMBA and os.environ.get("CRYAMABE_NUMBA", "1").strip().lower() not in ("0", "false", "no", "off")


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise an identity decorator."""
    if _HAVE_NUMBA:
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda f: f


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
