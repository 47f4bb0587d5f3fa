"""Kernel selection: compiled extension when available, numpy otherwise.

Set FAMPCA_PURE_PYTHON=1 in the environment to force the numpy path (used
by the benchmark and the parity tests). BACKEND names the active path.
"""

import os

from . import _ref

try:
    from . import _fast
except ImportError:
    _fast = None

if _fast is not None and not os.environ.get("FAMPCA_PURE_PYTHON"):
    _impl = _fast
    BACKEND = "cython"
else:
    _impl = _ref
    BACKEND = "numpy"

ar1_fill = _impl.ar1_fill
transmit = _impl.transmit
loess_fit = _impl.loess_fit

__all__ = ["BACKEND", "ar1_fill", "transmit", "loess_fit"]
