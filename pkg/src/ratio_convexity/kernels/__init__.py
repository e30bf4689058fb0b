"""KDE evaluation kernels: compiled extension with a numpy fallback.

The backend is chosen once at import time.  ``RATIO_CONVEXITY_BACKEND``
forces the choice (``compiled`` or ``pure``); the default ``auto`` prefers
the compiled extension when the build produced one.  Both backends compute
the same log-sum-exp and agree to rounding error.
"""

import os

import numpy as np

from . import _pure

try:
    from . import _kde_cy as _compiled
except ImportError:
    _compiled = None

__all__ = [
    "available_backends",
    "backend_name",
    "get_backend",
    "kde_log_density_batch",
]

_BACKENDS = {"pure": _pure.kde_log_density_batch}
if _compiled is not None:
    _BACKENDS["compiled"] = _compiled.kde_log_density_batch


def _select():
    requested = os.environ.get("RATIO_CONVEXITY_BACKEND", "auto").strip().lower()
    if requested in ("", "auto"):
        return "compiled" if _compiled is not None else "pure"
    if requested not in _BACKENDS:
        raise ImportError(
            f"RATIO_CONVEXITY_BACKEND={requested!r} is not available; "
            f"choices: auto, {', '.join(sorted(_BACKENDS))}")
    return requested


_ACTIVE = _select()


def backend_name():
    """Name of the backend selected at import time."""
    return _ACTIVE


def available_backends():
    return tuple(sorted(_BACKENDS))


def get_backend(name):
    """Fetch a specific backend implementation (for tests and benchmarks)."""
    try:
        return _BACKENDS[name]
    except KeyError:
        raise KeyError(f"unknown backend {name!r}; have {sorted(_BACKENDS)}") from None


def kde_log_density_batch(points, data, inv_bandwidth, log_norm):
    """Log-density of a Gaussian product-kernel KDE at each point row."""
    pts = np.ascontiguousarray(points, dtype=np.float64)
    dat = np.ascontiguousarray(data, dtype=np.float64)
    inv = np.ascontiguousarray(inv_bandwidth, dtype=np.float64)
    return _BACKENDS[_ACTIVE](pts, dat, inv, float(log_norm))
