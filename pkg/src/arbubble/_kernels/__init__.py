"""Numerical kernels with a compiled core and a pure-numpy fallback.

The compiled extension is optional: if the build step was skipped or failed,
the numpy implementations take over with identical results (bit for bit),
only slower.  `get_backend` lets tests and benchmarks force either one.
"""
from __future__ import annotations

from . import _fallback

try:
    from . import _core
    DEFAULT_BACKEND = "compiled"
except ImportError:
    _core = None
    DEFAULT_BACKEND = "python"

_BACKENDS = {"python": _fallback}
if _core is not None:
    _BACKENDS["compiled"] = _core


def available_backends():
    return sorted(_BACKENDS)


def get_backend(name: str | None = None):
    """Return the kernel module for `name` (default: best available)."""
    if name is None:
        name = DEFAULT_BACKEND
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(
            f"unknown kernel backend {name!r}; available: {available_backends()}"
        ) from None


kernels = get_backend()
