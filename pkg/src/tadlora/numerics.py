"""Dense small-matrix numerics: spectral quantities, deterministic random
streams, and finite-difference gradients.

All matrices are 2-D float64 numpy arrays. Eigenvalues and singular values
are computed with a cyclic Jacobi solver (see ``tadlora.kernels``) rather
than LAPACK so that results are bit-for-bit reproducible across BLAS builds.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from tadlora.errors import InvalidInputError
from tadlora.kernels import eigvalsh_sym

Matrix = np.ndarray

_LAPLACIAN_TOL = 1e-9
_FD_EPS_MIN = 1e-8
_FD_EPS_MAX = 1e-3


def as_matrix(x, name: str = "matrix") -> Matrix:
    """Coerce to a finite 2-D float64 array, raising InvalidInputError."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidInputError(f"{name} must be a 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return arr


def frob(m: Matrix) -> float:
    return float(np.sqrt(np.sum(m * m)))


def spectral_norm(m) -> float:
    """Largest singular value of a dense matrix.

    Computed as the square root of the top eigenvalue of the smaller Gram
    matrix, relative accuracy well below 1e-9 at the sizes this package
    handles (n <= 64).
    """
    arr = as_matrix(m, "spectral_norm input")
    if not arr.any():
        return 0.0
    if arr.shape[1] <= arr.shape[0]:
        gram = arr.T @ arr
    else:
        gram = arr @ arr.T
    gram = (gram + gram.T) / 2.0
    vals = eigvalsh_sym(gram)
    return math.sqrt(max(float(vals[-1]), 0.0))


def algebraic_connectivity(lap) -> float:
    """Second-smallest eigenvalue of a combinatorial graph Laplacian.

    The input must be symmetric with zero row sums and off-diagonal entries
    in {0, -1}; anything else raises InvalidInputError.
    """
    arr = as_matrix(lap, "laplacian")
    n = arr.shape[0]
    if arr.shape[1] != n:
        raise InvalidInputError(f"laplacian must be square, got {arr.shape}")
    if n < 2:
        raise InvalidInputError("laplacian needs at least 2 nodes")
    if np.max(np.abs(arr - arr.T)) > _LAPLACIAN_TOL:
        raise InvalidInputError("laplacian must be symmetric")
    off = arr.copy()
    np.fill_diagonal(off, 0.0)
    ok = (np.abs(off) <= _LAPLACIAN_TOL) | (np.abs(off + 1.0) <= _LAPLACIAN_TOL)
    if not np.all(ok):
        raise InvalidInputError("off-diagonal entries must be 0 or -1")
    if np.max(np.abs(arr.sum(axis=1))) > _LAPLACIAN_TOL:
        raise InvalidInputError("laplacian rows must sum to 0")
    vals = eigvalsh_sym(arr)
    return max(float(vals[1]), 0.0)


def finite_diff_grad(f: Callable[[Matrix], float], x, eps: float) -> Matrix:
    """Entry-wise central-difference gradient of a scalar matrix function."""
    arr = as_matrix(x, "finite_diff_grad point")
    if not (_FD_EPS_MIN <= eps <= _FD_EPS_MAX):
        raise InvalidInputError(
            f"eps={eps!r} outside supported range [{_FD_EPS_MIN}, {_FD_EPS_MAX}]"
        )
    grad = np.zeros_like(arr)
    for i in range(arr.shape[0]):
        for j in range(arr.shape[1]):
            plus = arr.copy()
            minus = arr.copy()
            plus[i, j] += eps
            minus[i, j] -= eps
            grad[i, j] = (f(plus) - f(minus)) / (2.0 * eps)
    return grad


@dataclass(frozen=True)
class RngStream:
    """Counter-based deterministic random stream keyed by (root_seed, path).

    Each (root_seed, path) pair maps through SHA-256 to a 128-bit Philox key,
    so draws depend only on the identity of the stream, never on how many
    other streams were consumed first. This is what makes parallel sweep
    execution incapable of perturbing results. For a fixed numpy version the
    sequence is identical across processes and platforms.
    """

    root_seed: int
    path: tuple[tuple[str, int], ...] = field(default=())

    def __post_init__(self):
        if not (0 <= int(self.root_seed) < 2**64):
            raise InvalidInputError("root_seed must be an unsigned 64-bit integer")

    def child(self, label: str, index: int = 0) -> "RngStream":
        """Derive the sub-stream identified by (label, index)."""
        return RngStream(self.root_seed, self.path + ((str(label), int(index)),))

    def key_bytes(self) -> bytes:
        h = hashlib.sha256()
        h.update(b"tadlora-rng\x00")
        h.update(int(self.root_seed).to_bytes(8, "big"))
        for label, index in self.path:
            h.update(label.encode("utf-8"))
            h.update(b"\x1f")
            h.update(int(index).to_bytes(8, "big", signed=True))
            h.update(b"\x1e")
        return h.digest()

    def generator(self) -> np.random.Generator:
        """Fresh generator at counter zero; calling twice replays the stream."""
        digest = self.key_bytes()
        key = np.frombuffer(digest[:16], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))
