"""Pure-Python cyclic Jacobi eigensolver for small symmetric matrices.

This is the fallback twin of the compiled kernel in ``_jacobi.pyx``. Both
implementations perform the same rotations in the same order so results
agree to the last bit on IEEE-754 hardware.
"""

from __future__ import annotations

import math

import numpy as np

# Relative off-diagonal threshold; rotations stop once the squared
# off-diagonal mass is below OFF_TOL_SQ times the squared Frobenius norm.
OFF_TOL_SQ = 1e-30
MAX_SWEEPS = 60


def eigvalsh_sym(a: np.ndarray) -> np.ndarray:
    """Eigenvalues of a symmetric matrix, ascending, via cyclic Jacobi."""
    n = a.shape[0]
    if n == 1:
        return np.array([float(a[0, 0])])

    m = [[float(a[i, j]) for j in range(n)] for i in range(n)]

    total_sq = 0.0
    for i in range(n):
        for j in range(n):
            total_sq += m[i][j] * m[i][j]
    if total_sq == 0.0:
        return np.zeros(n)

    threshold = OFF_TOL_SQ * total_sq
    for _ in range(MAX_SWEEPS):
        off_sq = 0.0
        for p in range(n - 1):
            row = m[p]
            for q in range(p + 1, n):
                off_sq += row[q] * row[q]
        if off_sq <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = m[p][q]
                if apq == 0.0:
                    continue
                theta = (m[q][q] - m[p][p]) / (2.0 * apq)
                if theta > 1e150 or theta < -1e150:
                    t = 0.5 / theta
                else:
                    t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                m[p][p] -= t * apq
                m[q][q] += t * apq
                m[p][q] = 0.0
                m[q][p] = 0.0
                for k in range(n):
                    if k == p or k == q:
                        continue
                    akp = m[k][p]
                    akq = m[k][q]
                    m[k][p] = c * akp - s * akq
                    m[p][k] = m[k][p]
                    m[k][q] = s * akp + c * akq
                    m[q][k] = m[k][q]

    diag = sorted(m[i][i] for i in range(n))
    return np.array(diag)
