"""Backend selection for the scoring kernels.

The compiled ``_ckernels`` module is used when it was built; otherwise the
numpy implementation in ``_pykernels``.  Setting ``LOADSCHED_BACKEND=python``
forces the fallback.
"""
from __future__ import annotations

import os

from . import _pykernels

python_backend = _pykernels

try:
    from . import _ckernels as compiled_backend
except ImportError:  # extension not built
    compiled_backend = None

if compiled_backend is not None and os.environ.get("LOADSCHED_BACKEND", "").lower() != "python":
    _impl = compiled_backend
    BACKEND = "cython"
else:
    _impl = _pykernels
    BACKEND = "python"

row_traces = _impl.row_traces
best_candidate = _impl.best_candidate
