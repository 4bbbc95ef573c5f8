"""Hot-kernel dispatch.

The PATCHSEG_BACKEND environment variable picks the implementation:
"numba" (compiled loops), "numpy" (vectorized fallback), or "auto"
(default: numba when importable, else numpy).  Both backends share
signatures and agree numerically; see benchmarks/kernel_bench.py.
"""
from __future__ import annotations

import os

_choice = os.environ.get("PATCHSEG_BACKEND", "auto").strip().lower()
if _choice not in ("auto", "numba", "numpy"):
    raise ValueError(
        f"PATCHSEG_BACKEND must be 'auto', 'numba' or 'numpy', got {_choice!r}"
    )

if _choice == "numpy":
    from . import numpy_backend as _impl
else:
    try:
        from . import numba_backend as _impl
    except ImportError:
        if _choice == "numba":
            raise
        from . import numpy_backend as _impl

BACKEND = _impl.NAME

correlate_padded = _impl.correlate_padded
box_sum_sq_padded = _impl.box_sum_sq_padded
weighted_patch_sum = _impl.weighted_patch_sum
patch_operator = _impl.patch_operator
residual_total = _impl.residual_total
curvature = _impl.curvature


def active_backend() -> str:
    """Name of the backend selected at import time."""
    return BACKEND


def available_backends() -> dict:
    """Importable backend modules keyed by name (for parity tests and benchmarks)."""
    from . import numpy_backend

    out = {"numpy": numpy_backend}
    try:
        from . import numba_backend

        out["numba"] = numba_backend
    except ImportError:
        pass
    return out
