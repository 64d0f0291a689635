"""JIT switch for the numeric kernels.

Kernels are written once in the numba-compatible subset of Python/numpy.  With
``REVGEOM_PURE_PYTHON=1`` in the environment (or numba missing) the decorator
becomes a no-op and the same source runs in the interpreter.
"""

import os

_FLAG = os.environ.get("REVGEOM_PURE_PYTHON", "").strip().lower()
PURE_PYTHON = _FLAG not in ("", "0", "false", "no")

try:  # pragma: no cover - import guard
    import numba as _numba
except ImportError:  # pragma: no cover
    _numba = None

USE_JIT = (_numba is not None) and not PURE_PYTHON


def njit(*args, **kwargs):
    """``numba.njit`` when JIT is enabled, identity decorator otherwise."""
    if USE_JIT:
        return _numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def wrap(func):
        return func

    return wrap


def set_num_threads(n):
    if USE_JIT and n:
        _numba.set_num_threads(int(n))


def backend_name():
    return "numba" if USE_JIT else "python"
