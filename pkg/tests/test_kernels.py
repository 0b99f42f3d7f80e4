"""Kernel backend tests: Jacobi eigensolver vs a LAPACK oracle, and parity
between the compiled extension and the pure-Python twin."""

import numpy as np
import pytest

from tadlora.kernels import available_backends, backend, eigvalsh_sym


def _random_symmetric(n: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    s = rng.standard_normal((n, n))
    return (s + s.T) / 2.0


@pytest.mark.parametrize("n", [1, 2, 3, 5, 10, 32, 64])
def test_matches_lapack_oracle(n):
    s = _random_symmetric(n, seed=100 + n)
    ours = eigvalsh_sym(s)
    ref = np.linalg.eigvalsh(s)
    scale = max(1.0, float(np.max(np.abs(ref))))
    assert np.max(np.abs(ours - ref)) <= 1e-12 * scale


def test_zero_matrix():
    assert np.array_equal(eigvalsh_sym(np.zeros((4, 4))), np.zeros(4))


def test_diagonal_matrix_exact():
    d = np.diag([3.0, -1.0, 2.5])
    assert np.array_equal(eigvalsh_sym(d), np.array([-1.0, 2.5, 3.0]))


def test_eigenvalues_sorted_ascending():
    s = _random_symmetric(12, seed=7)
    vals = eigvalsh_sym(s)
    assert np.all(np.diff(vals) >= 0)


def test_backend_parity():
    impls = available_backends()
    if "compiled" not in impls:
        pytest.skip("compiled kernel not built")
    for n in (2, 5, 10, 33):
        s = _random_symmetric(n, seed=n)
        a = impls["compiled"](s.copy())
        b = impls["python"](s.copy())
        # same rotations in the same order; bit-equality expected, allow
        # a vanishing tolerance for exotic compilers
        assert np.max(np.abs(a - b)) <= 1e-15 * max(1.0, np.max(np.abs(a)))


def test_backend_reports_name():
    assert backend() in ("compiled", "python")
