"""Kernel backend selection.

The compiled extension is used when it imports; set ``PERMCONC_PURE_PYTHON=1``
to force the numpy fallback.
"""
from __future__ import annotations

import os

from . import _pykernels

BACKEND = "python"
if os.environ.get("PERMCONC_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels
else:
    _impl = _pykernels

hamming_matrix = _impl.hamming_matrix
two_point_scan = _impl.two_point_scan
transport_simplex = _impl.transport_simplex
