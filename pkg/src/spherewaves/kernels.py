"""Backend selection for the hot kernels.

The compiled extension is used when it imports; setting the environment
variable ``SPHEREWAVES_PURE_PYTHON=1`` forces the numpy fallback.
"""
import os

from . import _kernels_py

if os.environ.get("SPHEREWAVES_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

order_table = _impl.order_table
contour_length = _impl.contour_length

__all__ = ["BACKEND", "contour_length", "order_table"]
