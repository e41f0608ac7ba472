"""Pick the compiled kernels when built, the numpy fallback otherwise.

Set ``POSAID_PURE_PYTHON=1`` to force the fallback (used by the benchmark
and by the backend-agreement tests).
"""
import os

from . import _kernels_py

kernels_py = _kernels_py
kernels_c = None

try:
    from . import _kernels as kernels_c  # type: ignore[no-redef]
except ImportError:  # extension not built
    kernels_c = None

if kernels_c is not None and os.environ.get("POSAID_PURE_PYTHON", "") not in ("1", "true"):
    kernels = kernels_c
    BACKEND = "cython"
else:
    kernels = kernels_py
    BACKEND = "python"
