"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the NumPy/SciPy
fallback.  Setting CHEMOWAVE_PURE_PYTHON=1 forces the fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
if os.environ.get("CHEMOWAVE_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py
else:
    _impl = _kernels_py

thomas = _impl.thomas
implicit_steps = _impl.implicit_steps


def backends():
    """Available backends by name (the fallback is always present)."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels
        out["cython"] = _kernels
    except ImportError:
        pass
    return out
