"""Kernel dispatch: compiled extension when available, NumPy fallback otherwise.

Set the environment variable ``STPOLAR_NO_EXT=1`` before import to force the
pure-Python path (used by the benchmark and for debugging).
"""

from __future__ import annotations

import os

from . import _kernels_py

try:
    from . import _ckernels
except ImportError:  # pragma: no cover - depends on build environment
    _ckernels = None

HAVE_EXT = _ckernels is not None
_impl = _kernels_py if (_ckernels is None or os.environ.get("STPOLAR_NO_EXT")) \
    else _ckernels

IMPL_NAME = _impl.IMPL_NAME

polar_transform = _impl.polar_transform
sc_decode = _impl.sc_decode
sc_genie_errors = _impl.sc_genie_errors
subset_llrs = _impl.subset_llrs
mi_terms = _impl.mi_terms


def implementations() -> dict:
    """Available kernel implementations by name (for parity tests/benchmarks)."""
    impls = {"python": _kernels_py}
    if _ckernels is not None:
        impls["compiled"] = _ckernels
    return impls
