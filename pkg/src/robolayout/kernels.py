"""Hot-loop kernels: the compiled extension when it imports, numpy otherwise.

Set ``ROBOLAYOUT_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _kernels_py

if os.environ.get("ROBOLAYOUT_PURE_PYTHON"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_py

BACKEND = "compiled" if _impl is not _kernels_py else "python"

arm_pair_mask = _impl.arm_pair_mask
arm_segment_mask = _impl.arm_segment_mask
primal_ratio_test = _impl.primal_ratio_test
dual_ratio_test = _impl.dual_ratio_test
eta_ftran = _impl.eta_ftran
eta_btran = _impl.eta_btran
