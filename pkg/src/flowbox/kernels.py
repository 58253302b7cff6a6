"""Backend selection for the numeric kernels.

The compiled extension is used when importable; setting the environment
variable ``FLOWBOX_PURE_PYTHON=1`` forces the numpy fallback.
"""
from __future__ import annotations

import os

from . import _kernels_py

_impl = _kernels_py
if not os.environ.get("FLOWBOX_PURE_PYTHON"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _kernels_py

BACKEND: str = _impl.BACKEND
OK, DOMAIN_EXIT, STEP_UNDERFLOW, MAX_STEPS = (
    _kernels_py.OK,
    _kernels_py.DOMAIN_EXIT,
    _kernels_py.STEP_UNDERFLOW,
    _kernels_py.MAX_STEPS,
)

poly_eval = _impl.poly_eval
poly_eval_batch = _impl.poly_eval_batch
dopri5_poly = _impl.dopri5_poly
shoot_batch = _impl.shoot_batch

# callable-field variants only exist in Python
dopri5 = _kernels_py.dopri5
shoot_batch_callable = _kernels_py.shoot_batch_callable

__all__ = [
    "BACKEND",
    "poly_eval",
    "poly_eval_batch",
    "dopri5_poly",
    "dopri5",
    "shoot_batch",
    "shoot_batch_callable",
]
