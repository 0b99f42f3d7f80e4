# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled cyclic Jacobi eigensolver for small symmetric matrices.

Mirrors ``_jacobi_py.eigvalsh_sym`` rotation for rotation; compiled with
-ffp-contract=off so both backends produce identical floating-point output.
"""

from libc.math cimport fabs, sqrt

import numpy as np

DEF OFF_TOL_SQ = 1e-30
DEF MAX_SWEEPS = 60


def eigvalsh_sym(a):
    """Eigenvalues of a symmetric matrix, ascending, via cyclic Jacobi."""
    cdef double[:, ::1] a_in = np.ascontiguousarray(a, dtype=np.float64)
    cdef Py_ssize_t n = a_in.shape[0]
    if n == 1:
        return np.array([a_in[0, 0]])

    work = np.array(a_in, copy=True)
    cdef double[:, ::1] m = work
    cdef Py_ssize_t i, j, p, q, k, sweep
    cdef double total_sq = 0.0
    cdef double off_sq, apq, theta, t, c, s, akp, akq, threshold

    for i in range(n):
        for j in range(n):
            total_sq += m[i, j] * m[i, j]
    if total_sq == 0.0:
        return np.zeros(n)

    threshold = OFF_TOL_SQ * total_sq
    for sweep in range(MAX_SWEEPS):
        off_sq = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off_sq += m[p, q] * m[p, q]
        if off_sq <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = m[p, q]
                if apq == 0.0:
                    continue
                theta = (m[q, q] - m[p, p]) / (2.0 * apq)
                if theta > 1e150 or theta < -1e150:
                    t = 0.5 / theta
                else:
                    t = 1.0 / (fabs(theta) + sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / sqrt(t * t + 1.0)
                s = t * c
                m[p, p] -= t * apq
                m[q, q] += t * apq
                m[p, q] = 0.0
                m[q, p] = 0.0
                for k in range(n):
                    if k == p or k == q:
                        continue
                    akp = m[k, p]
                    akq = m[k, q]
                    m[k, p] = c * akp - s * akq
                    m[p, k] = m[k, p]
                    m[k, q] = s * akp + c * akq
                    m[q, k] = m[k, q]

    diag = np.empty(n)
    for i in range(n):
        diag[i] = m[i, i]
    diag.sort()
    return diag
