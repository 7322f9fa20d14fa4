"""Backend selection for the hot loops.

The compiled extension is used when it imports; otherwise the numpy version
runs. Set ``DVORETZKY_FRAMES_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _fw_py

BACKEND = "python"
fw_iterate = _fw_py.fw_iterate

if not os.environ.get("DVORETZKY_FRAMES_PURE_PYTHON"):
    try:
        from . import _fw_core
    except ImportError:
        pass
    else:
        fw_iterate = _fw_core.fw_iterate
        BACKEND = "cython"


def get_fw_iterate(backend=None):
    """Return the kernel for ``backend`` ('cython', 'python' or None for the default)."""
    if backend is None:
        return fw_iterate
    if backend == "python":
        return _fw_py.fw_iterate
    if backend == "cython":
        from . import _fw_core
        return _fw_core.fw_iterate
    raise ValueError(f"unknown backend {backend!r}")
