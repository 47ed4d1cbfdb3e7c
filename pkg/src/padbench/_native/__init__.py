"""Backend selection for the SGD training kernel.

The compiled extension is preferred when importable; setting the
environment variable PADBENCH_PURE_PY=1 before import forces the numpy
implementation.  Both backends follow one contract (see fallback.py), so a
given seed produces the same batch schedule everywhere; numerical results
agree to rounding across backends and are bitwise reproducible within one.
"""

import os

from . import fallback

__all__ = ["available_backends", "get_backend", "backend_name"]

_backends = {"python": fallback}

try:
    from . import _sgd

    _backends["cython"] = _sgd
except ImportError:  # pragma: no cover - depends on the build
    _sgd = None

if os.environ.get("PADBENCH_PURE_PY") == "1" or "cython" not in _backends:
    _default = "python"
else:
    _default = "cython"


def available_backends():
    return tuple(sorted(_backends))


def get_backend(name=None):
    """Backend module by name; the selected default when name is None."""
    if name is None:
        name = _default
    try:
        return _backends[name]
    except KeyError:
        raise ValueError(
            f"unknown backend {name!r}; available: {', '.join(sorted(_backends))}"
        ) from None


def backend_name():
    return _default
