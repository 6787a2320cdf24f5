"""Kernel backend selection.

The compiled extension is used when it imports; setting the environment
variable ``SIPOLAR_BACKEND=python`` forces the numpy fallback.
"""

import os

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    _BACKENDS["compiled"] = _ckernels


def available():
    return sorted(_BACKENDS)


def get_kernels(name=None):
    """Return the kernel module ``name`` (default: the active backend)."""
    if name is None:
        return kernels
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} not available; have {available()}") from None


BACKEND = os.environ.get("SIPOLAR_BACKEND", "").strip().lower() or (
    "compiled" if _ckernels is not None else "python"
)
if BACKEND not in _BACKENDS:
    raise ImportError(f"SIPOLAR_BACKEND={BACKEND!r} is not available; have {available()}")
kernels = _BACKENDS[BACKEND]
