"""Kernel dispatch: the compiled Cython module when importable, else numpy.

Set ``BJORTHO_PURE_PYTHON=1`` to force the fallback. ``BACKEND`` names the
module in use.
"""

import os

import numpy as np

from . import _pykernels

if os.environ.get("BJORTHO_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:
        _impl = _pykernels

BACKEND = "cython" if _impl is not _pykernels else "python"


def _matrix(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def triangle_violations(dist, tol, limit=10_000):
    return _impl.triangle_violations(_matrix(dist), float(tol), int(limit))


def count_components(dist, subset, eps):
    subset = np.ascontiguousarray(subset, dtype=np.int64)
    return int(_impl.count_components(_matrix(dist), subset, float(eps)))


def column_max_argmax(values):
    values = _matrix(values)
    if values.ndim != 2 or values.shape[0] == 0:
        raise ValueError("need a non-empty 2-D array")
    return _impl.column_max_argmax(values)


def min_second_difference(values):
    values = _matrix(values)
    if values.ndim != 2 or values.shape[1] < 3:
        raise ValueError("need a 2-D array with at least 3 columns")
    return _impl.min_second_difference(values)


def thread_count():
    """Worker cap from ``BJ_ORTHO_THREADS`` (0 or unset: one per CPU)."""
    raw = os.environ.get("BJ_ORTHO_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n <= 0:
        n = os.cpu_count() or 1
    return n
