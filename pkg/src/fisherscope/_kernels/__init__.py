"""Hot-kernel backend selection.

The compiled Cython extension is preferred when it imported successfully;
otherwise the pure-numpy fallback is used.  ``FISHERSCOPE_KERNELS=python``
or ``=cython`` forces a backend (forcing cython raises if the extension is
unavailable).  Selection happens once, at import.
"""

from __future__ import annotations

import os

from . import _numpy_impl

_choice = os.environ.get("FISHERSCOPE_KERNELS", "auto").strip().lower()

if _choice in ("auto", "", "cython"):
    try:
        from . import _cykernels as _impl

        _BACKEND = "cython"
    except ImportError:
        if _choice == "cython":
            raise
        _impl = _numpy_impl
        _BACKEND = "python"
elif _choice in ("python", "numpy"):
    _impl = _numpy_impl
    _BACKEND = "python"
else:
    raise ValueError(
        f"FISHERSCOPE_KERNELS must be 'auto', 'python', or 'cython', got {_choice!r}"
    )

GELU_C = _numpy_impl.GELU_C
GELU_A = _numpy_impl.GELU_A

relu_fwd = _impl.relu_fwd
relu_bwd = _impl.relu_bwd
gelu_fwd = _impl.gelu_fwd
gelu_bwd = _impl.gelu_bwd
softmax_rows = _impl.softmax_rows
softmax_rows_bwd = _impl.softmax_rows_bwd
logsumexp_rows = _impl.logsumexp_rows
layernorm_rows_fwd = _impl.layernorm_rows_fwd
layernorm_rows_bwd = _impl.layernorm_rows_bwd


def active_backend() -> str:
    """Name of the kernel backend selected at import: 'cython' or 'python'."""
    return _BACKEND
