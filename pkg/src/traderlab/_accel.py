"""Optional numba acceleration for the hot numeric kernels.

The heavy inner loops (forest growth, the max-Sharpe projected-gradient
solver) are written in nopython-compatible numpy and compiled with numba
when it is available.  Setting ``TRADERLAB_NUMBA=0`` in the environment
forces the plain-Python/numpy path; both paths run the exact same code and
produce bit-identical results.
"""

from __future__ import annotations

import os


def _env_allows_numba() -> bool:
    return os.environ.get("TRADERLAB_NUMBA", "1").strip().lower() not in ("0", "false", "off")


NUMBA_ENABLED = False

if _env_allows_numba():
    try:
        from numba import njit as _njit

        NUMBA_ENABLED = True
    except ImportError:
        NUMBA_ENABLED = False


def maybe_jit(func):
    """Compile ``func`` with numba when enabled, otherwise return it as-is."""
    if NUMBA_ENABLED:
        return _njit(cache=True)(func)
    return func
