"""Kernel dispatch: the compiled extension when available, numpy otherwise.

Set ``PADPLAN_PURE_PYTHON=1`` to force the fallback.
"""

import os

from padplan import _pykernels

IMPLEMENTATION = "python"
_impl = _pykernels
if not os.environ.get("PADPLAN_PURE_PYTHON"):
    try:
        from padplan import _ckernels as _impl

        IMPLEMENTATION = "cython"
    except ImportError:
        _impl = _pykernels

best_period_pattern = _impl.best_period_pattern
propagate_topological = _impl.propagate_topological

__all__ = ["IMPLEMENTATION", "best_period_pattern", "propagate_topological"]
