"""Kernel backend selection.

The compiled ``_ckernels`` extension is used when it imports cleanly; the
numpy implementations in ``_kernels_py`` are the fallback. Setting
``COGRA_PURE_PYTHON=1`` forces the fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if not os.environ.get("COGRA_PURE_PYTHON"):
    try:
        from . import _ckernels as _impl  # noqa: F811

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on build
        _impl = _kernels_py

policy_power = _impl.policy_power
policy_moments = _impl.policy_moments
rate_moments = _impl.rate_moments
renewal_overlap = _impl.renewal_overlap

LOG2E = _kernels_py.LOG2E

__all__ = [
    "BACKEND",
    "LOG2E",
    "policy_power",
    "policy_moments",
    "rate_moments",
    "renewal_overlap",
]
