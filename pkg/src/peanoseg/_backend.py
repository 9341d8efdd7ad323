"""Kernel backend selection: compiled sweeps when available, numpy otherwise.

Set PEANOSEG_PURE_PYTHON=1 to force the numpy fallback; the benchmark and
the backend-equivalence tests use this switch.
"""

import os

if os.environ.get("PEANOSEG_PURE_PYTHON"):
    from . import _kernels_py as kernels
    BACKEND = "python"
else:
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]
        BACKEND = "cython"
    except ImportError:
        from . import _kernels_py as kernels  # type: ignore[no-redef]
        BACKEND = "python"


def backend_name() -> str:
    """Name of the active kernel backend: "cython" or "python"."""
    return BACKEND
