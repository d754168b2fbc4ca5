"""Kernel selection: compiled extension if built, numpy fallback otherwise.

Set ``SPLYNE_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _fallback

BACKEND = "python"
eval_bsplines = _fallback.eval_bsplines
accumulate_local = _fallback.accumulate_local

if not os.environ.get("SPLYNE_PURE_PYTHON"):
    try:
        from . import _kernels
    except ImportError:  # extension not compiled
        pass
    else:
        eval_bsplines = _kernels.eval_bsplines
        accumulate_local = _kernels.accumulate_local
        BACKEND = "cython"

__all__ = ["BACKEND", "eval_bsplines", "accumulate_local"]
