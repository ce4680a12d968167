"""Kernel backend selection.

The compiled Cython kernels are used when importable; setting the
environment variable ``PERMADYN_PURE_PYTHON=1`` forces the pure-Python
fallback.
"""
import os

from . import _pykernels

python_kernels = _pykernels

try:
    if os.environ.get("PERMADYN_PURE_PYTHON", "").strip() not in ("", "0"):
        raise ImportError("pure-Python kernels requested")
    from . import _ckernels as kernels
    compiled_kernels = kernels
    COMPILED = True
except ImportError:
    kernels = _pykernels
    compiled_kernels = None
    COMPILED = False

BACKEND = "cython" if COMPILED else "python"

dp45 = _pykernels.dp45
dp45_lmg = kernels.dp45_lmg
dicke_liouvillian_coo = kernels.dicke_liouvillian_coo

OK = _pykernels.OK
UNDERFLOW = _pykernels.UNDERFLOW
ESCAPE = _pykernels.ESCAPE
MAX_STEPS = _pykernels.MAX_STEPS
