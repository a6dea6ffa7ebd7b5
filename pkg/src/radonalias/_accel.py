"""Numba switch.

Set ``RADONALIAS_NO_NUMBA=1`` to force the pure-numpy code paths. The flag is
read once at import time.
"""
import os

_flag = os.environ.get("RADONALIAS_NO_NUMBA", "").strip().lower()
_disabled = _flag not in ("", "0", "false", "no")

try:
    import numba
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba = None

USE_NUMBA = numba is not None and not _disabled

if numba is not None and "NUMBA_THREADING_LAYER" not in os.environ:
    # an outdated system TBB only produces a warning; try it last
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]


def njit(fn=None, parallel=False):
    """Compile ``fn`` with numba when available; otherwise return it unchanged."""
    def wrap(f):
        if numba is None:
            return f
        return numba.njit(cache=True, fastmath=False, parallel=parallel)(f)
    return wrap if fn is None else wrap(fn)


if numba is not None:
    prange = numba.prange
else:  # pragma: no cover
    prange = range


def set_threads(n):
    """Limit numba's worker threads (no-op without numba). Returns the count in use."""
    if numba is None:
        return 1
    n = max(1, min(int(n), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(n)
    return n
