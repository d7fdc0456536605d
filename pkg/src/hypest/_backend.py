"""Select the compiled kernels when available, else the numpy fallback.

Set ``HYPEST_BACKEND=python`` to force the fallback (used by the benchmark
and by the cross-backend tests).
"""

import os

from . import _kernels_py

BACKEND = "python"
lstsq = _kernels_py.lstsq
logistic_newton = _kernels_py.logistic_newton

if os.environ.get("HYPEST_BACKEND", "").lower() != "python":
    try:
        from . import _kernels
    except ImportError:  # extension not built
        pass
    else:
        BACKEND = "cython"
        lstsq = _kernels.lstsq
        logistic_newton = _kernels.logistic_newton

__all__ = ["BACKEND", "lstsq", "logistic_newton"]
