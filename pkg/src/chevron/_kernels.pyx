# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: batched tridiagonal factor/solve and director renormalization."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()

cdef enum:
    BLOCK = 8


def tridiag_factor(const double complex[:, ::1] lower,
                   const double complex[:, ::1] diag,
                   const double complex[:, ::1] upper):
    cdef Py_ssize_t nb = diag.shape[0], n = diag.shape[1]
    cp_arr = np.empty((nb, n), dtype=np.complex128)
    inv_arr = np.empty((nb, n), dtype=np.complex128)
    cdef double complex[:, ::1] cp = cp_arr
    cdef double complex[:, ::1] inv = inv_arr
    cdef Py_ssize_t b, b0, b1, i
    cdef double complex den
    # blocks of BLOCK systems: rows stay in cache and the independent recurrences overlap
    with nogil:
        b0 = 0
        while b0 < nb:
            b1 = min(b0 + BLOCK, nb)
            for b in range(b0, b1):
                inv[b, 0] = 1.0 / diag[b, 0]
                cp[b, 0] = upper[b, 0] * inv[b, 0]
            for i in range(1, n):
                for b in range(b0, b1):
                    den = diag[b, i] - lower[b, i] * cp[b, i - 1]
                    inv[b, i] = 1.0 / den
                    cp[b, i] = upper[b, i] * inv[b, i]
            b0 = b1
    return cp_arr, inv_arr


def tridiag_solve(const double complex[:, ::1] lower,
                  const double complex[:, ::1] cp,
                  const double complex[:, ::1] inv,
                  const double complex[:, ::1] rhs):
    cdef Py_ssize_t nb = rhs.shape[0], n = rhs.shape[1]
    out_arr = np.empty((nb, n), dtype=np.complex128)
    cdef double complex[:, ::1] x = out_arr
    cdef Py_ssize_t b, b0, b1, i
    with nogil:
        b0 = 0
        while b0 < nb:
            b1 = min(b0 + BLOCK, nb)
            for b in range(b0, b1):
                x[b, 0] = rhs[b, 0] * inv[b, 0]
            for i in range(1, n):
                for b in range(b0, b1):
                    x[b, i] = (rhs[b, i] - lower[b, i] * x[b, i - 1]) * inv[b, i]
            for i in range(n - 2, -1, -1):
                for b in range(b0, b1):
                    x[b, i] = x[b, i] - cp[b, i] * x[b, i + 1]
            b0 = b1
    return out_arr


def renormalize(double[:, ::1] n):
    """Scale each column of a (3, m) array to unit length, in place."""
    cdef Py_ssize_t m = n.shape[1], j
    cdef double s
    with nogil:
        for j in range(m):
            s = 1.0 / sqrt(n[0, j] * n[0, j] + n[1, j] * n[1, j] + n[2, j] * n[2, j])
            n[0, j] *= s
            n[1, j] *= s
            n[2, j] *= s
