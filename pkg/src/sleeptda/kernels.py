"""Backend selection for the hot loops.

The compiled Cython module is used when it was built; otherwise the numpy
fallback is loaded. Setting ``SLEEPTDA_PURE_PYTHON=1`` forces the fallback.
"""

import os

from . import _pykernels

if os.environ.get("SLEEPTDA_PURE_PYTHON"):
    _impl = _pykernels
else:
    try:
        from . import _kernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND = "python" if _impl is _pykernels else "cython"

h0_merges = _impl.h0_merges
reduce_columns = _impl.reduce_columns
landscape_levels = _impl.landscape_levels


def available_backends():
    """Map backend name -> kernel module, for tests and benchmarks."""
    out = {"python": _pykernels}
    try:
        from . import _kernels
    except ImportError:
        pass
    else:
        out["cython"] = _kernels
    return out
