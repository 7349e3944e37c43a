"""Backend selection for the trace kernels.

The compiled extension is used when it imports cleanly; otherwise the
numpy/pure-Python twins are used. Set ``RELIAB_PURE_PYTHON=1`` to force the
fallback.
"""
from __future__ import annotations

import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("RELIAB_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels

rolling_variance = _impl.rolling_variance
first_sustained_in_band = _impl.first_sustained_in_band
ece_bins = _impl.ece_bins
lyapunov_replay = _impl.lyapunov_replay

__all__ = [
    "BACKEND",
    "rolling_variance",
    "first_sustained_in_band",
    "ece_bins",
    "lyapunov_replay",
]
