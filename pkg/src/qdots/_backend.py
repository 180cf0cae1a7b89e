"""Select the compiled kernels if available, otherwise the numpy fallback.

Set ``QDOTS_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py

if os.environ.get("QDOTS_PURE_PYTHON", "") not in ("", "0"):
    kernels = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as kernels
        BACKEND = "cython"
    except ImportError:  # extension not built
        kernels = _kernels_py
        BACKEND = "python"

__all__ = ["kernels", "BACKEND"]
