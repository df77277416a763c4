"""Encoder hot kernels with backend selection at import time.

Prefers the compiled extension (``_speedups``), falling back to the NumPy
implementation when the extension was not built. Set DYCONFID_PURE_PYTHON=1
to force the fallback (used by the parity tests and the benchmark).
"""

import os

from . import numpy_backend

if os.environ.get("DYCONFID_PURE_PYTHON"):
    _impl = numpy_backend
else:
    try:
        from . import _speedups as _impl
    except ImportError:
        _impl = numpy_backend

BACKEND = _impl.BACKEND
encoder_forward = _impl.encoder_forward
encoder_backward = _impl.encoder_backward
