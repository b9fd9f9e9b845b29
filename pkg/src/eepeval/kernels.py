"""Backend selection for the hot loops.

The compiled extension is used when it imports; otherwise the pure-Python
module is used. ``BACKEND`` names the active one.
"""

from __future__ import annotations

import numpy as np

from . import _pykernels

try:
    from . import _ckernels as _impl

    BACKEND = "cython"
except ImportError:  # extension not built
    _impl = _pykernels
    BACKEND = "python"

BACKENDS = {"python": _pykernels}
if BACKEND == "cython":
    BACKENDS["cython"] = _impl


def get_backend(name: str | None = None):
    if name is None:
        return _impl
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} not available; have {sorted(BACKENDS)}") from None


def as_f64(x) -> np.ndarray:
    return np.ascontiguousarray(x, dtype=np.float64)


def as_i8(x) -> np.ndarray:
    return np.ascontiguousarray(x, dtype=np.int8)
