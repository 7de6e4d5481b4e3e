"""Numerical core: compiled Cython kernels with a pure NumPy fallback.

The compiled extension is used when it imports; set ``RNCCTL_PURE=1`` to
force the fallback. ``BACKEND`` names the active implementation.
"""

import os

from . import _fallback
from .tables import EXP, INV, LOG, MUL, NIB

_compiled = None
if os.environ.get("RNCCTL_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None

_impl = _compiled if _compiled is not None else _fallback
BACKEND = "cython" if _compiled is not None else "numpy"
SIMD_LEVEL = _impl.SIMD_LEVEL

rank_derivative = _impl.rank_derivative
rk4_steps = _impl.rk4_steps
gf_reduce_insert = _impl.gf_reduce_insert
gf_combine = _impl.gf_combine
gf_lincomb = _impl.gf_lincomb


def get_backend(name):
    """Return the kernel module for ``"cython"`` or ``"numpy"``."""
    if name == "numpy":
        return _fallback
    if name == "cython":
        if _compiled is None:
            from . import _kernels
            return _kernels
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


__all__ = [
    "BACKEND", "SIMD_LEVEL", "EXP", "LOG", "MUL", "INV", "NIB", "get_backend",
    "rank_derivative", "rk4_steps", "gf_reduce_insert", "gf_combine", "gf_lincomb",
]
