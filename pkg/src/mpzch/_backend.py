"""Select the probing kernels at import time.

The compiled extension is preferred. Setting ``MPZCH_PURE_PYTHON=1`` forces
the numpy fallback, which is also used whenever the extension is not built.
"""
from __future__ import annotations

import os

from . import _kernels_py

python_kernels = _kernels_py
compiled_kernels = None

try:
    from . import _kernels as compiled_kernels  # type: ignore[no-redef]
except ImportError:  # extension not built
    compiled_kernels = None

if compiled_kernels is not None and os.environ.get("MPZCH_PURE_PYTHON", "") in ("", "0"):
    kernels = compiled_kernels
else:
    kernels = python_kernels

BACKEND: str = kernels.BACKEND
home_slots = _kernels_py.home_slots


def available() -> dict:
    out = {"python": python_kernels}
    if compiled_kernels is not None:
        out["cython"] = compiled_kernels
    return out
