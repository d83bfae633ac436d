"""Selects the compiled association kernels, falling back to numpy.

``BACKEND`` is ``"cython"`` or ``"python"``.  Set ``SLCGLMB_PURE_PYTHON=1``
to force the fallback.
"""
import os

from . import _kernels_py

if os.environ.get("SLCGLMB_PURE_PYTHON") == "1":
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_py

BACKEND = "python" if _impl is _kernels_py else "cython"

count_injective = _kernels_py.count_injective
enumerate_injective = _impl.enumerate_injective
mta_log_scores = _impl.mta_log_scores
