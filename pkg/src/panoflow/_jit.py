"""Numba availability and the environment switch for the pure-numpy path.

Set ``PANOFLOW_DISABLE_NUMBA=1`` before importing panoflow to force the
vectorised numpy kernels even when numba is installed.
"""
import os

_FLAG = os.environ.get("PANOFLOW_DISABLE_NUMBA", "").strip().lower()
DISABLED_BY_ENV = _FLAG not in ("", "0", "false", "no", "off")

try:
    import numba
    from numba import njit, prange

    if "NUMBA_THREADING_LAYER" not in os.environ:
        # the bundled TBB is too old and warns on every first parallel call
        numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def decorator(func):
            return func

        return decorator

    prange = range

USE_NUMBA = HAVE_NUMBA and not DISABLED_BY_ENV


def set_num_threads(n):
    """Cap numba's worker pool; no-op on the numpy path."""
    if n is None or not HAVE_NUMBA:
        return
    import numba

    numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))
