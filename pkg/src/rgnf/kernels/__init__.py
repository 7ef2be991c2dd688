"""Numeric kernels with a compiled core and a numpy fallback.

The Cython extension is used when it was built; otherwise (or when the
environment variable ``RGNF_PURE_PYTHON`` is set to a non-empty value other
than ``0``) the numpy implementations in :mod:`._pykernels` are used.
``BACKEND`` names the active implementation.
"""
import os

from . import _pykernels

_force_python = os.environ.get("RGNF_PURE_PYTHON", "") not in ("", "0")

try:
    if _force_python:
        raise ImportError("pure-Python kernels requested")
    from . import _ckernels as _impl

    BACKEND = "cython"
except ImportError:
    _impl = _pykernels
    BACKEND = "python"

poly_eval = _impl.poly_eval
poly_eval_batch = _impl.poly_eval_batch
rk4_poly = _impl.rk4_poly

__all__ = ["BACKEND", "poly_eval", "poly_eval_batch", "rk4_poly"]
