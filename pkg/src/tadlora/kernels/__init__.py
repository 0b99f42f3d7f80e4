"""Hot spectral kernels with a compiled core and a pure-Python fallback.

The compiled extension is preferred when importable; otherwise the
pure-Python twin is used transparently. ``backend()`` reports which one is
active, and ``available_backends()`` exposes both for benchmarking.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from tadlora.kernels import _jacobi_py

try:
    from tadlora.kernels import _jacobi as _compiled
except ImportError:  # extension not built
    _compiled = None

_impl = _compiled.eigvalsh_sym if _compiled is not None else _jacobi_py.eigvalsh_sym
_BACKEND = "compiled" if _compiled is not None else "python"


def backend() -> str:
    """Name of the active kernel backend: 'compiled' or 'python'."""
    return _BACKEND


def available_backends() -> dict[str, Callable[[np.ndarray], np.ndarray]]:
    """All importable eigvalsh_sym implementations, keyed by backend name."""
    impls: dict[str, Callable[[np.ndarray], np.ndarray]] = {
        "python": _jacobi_py.eigvalsh_sym,
    }
    if _compiled is not None:
        impls["compiled"] = _compiled.eigvalsh_sym
    return impls


def eigvalsh_sym(a: np.ndarray) -> np.ndarray:
    """Eigenvalues (ascending) of a symmetric float64 matrix."""
    arr = np.ascontiguousarray(a, dtype=np.float64)
    return _impl(arr)
