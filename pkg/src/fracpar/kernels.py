"""Hot-kernel dispatch: compiled core if importable, numpy fallback otherwise.

Set FRACPAR_PURE_PYTHON=1 to force the fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"
double_difference_form = _kernels_py.double_difference_form
holder_quotients = _kernels_py.holder_quotients

if os.environ.get("FRACPAR_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels
    except ImportError:  # no compiled build available
        pass
    else:
        BACKEND = "cython"
        double_difference_form = _ckernels.double_difference_form
        holder_quotients = _ckernels.holder_quotients

__all__ = ["BACKEND", "double_difference_form", "holder_quotients"]
