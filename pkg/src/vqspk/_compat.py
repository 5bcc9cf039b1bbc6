"""Optional numba acceleration.

Set ``VQSPK_DISABLE_NUMBA=1`` to force the pure-numpy code paths. When numba
is not installed the numpy paths are used and a :class:`PerformanceWarning`
is emitted once at import.
"""

import os
import warnings


class PerformanceWarning(UserWarning):
    pass


def _flag(name):
    return os.environ.get(name, "").strip().lower() not in ("", "0", "false", "no")


NUMBA_DISABLED = _flag("VQSPK_DISABLE_NUMBA")

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

USE_NUMBA = HAS_NUMBA and not NUMBA_DISABLED

if not HAS_NUMBA and not NUMBA_DISABLED:  # pragma: no cover
    warnings.warn(
        "numba is not available; falling back to numpy kernels",
        PerformanceWarning,
        stacklevel=2,
    )
