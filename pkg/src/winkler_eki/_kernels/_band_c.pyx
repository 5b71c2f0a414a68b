# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled banded Cholesky kernels.

Same band layout and semantics as band_py (the reference implementation);
loops release the GIL so ensemble members can be solved from worker threads.
"""

from libc.math cimport sqrt

import numpy as np

__all__ = ["cholesky_band", "solve_band", "backsolve_band"]


cdef Py_ssize_t _cholesky(double[:, ::1] ab) noexcept nogil:
    cdef Py_ssize_t bw = ab.shape[0] - 1
    cdef Py_ssize_t p = ab.shape[1]
    cdef Py_ssize_t j, t, r, m
    cdef double c, v
    for j in range(p):
        c = ab[0, j]
        if not c > 0.0:
            return j + 1
        c = sqrt(c)
        ab[0, j] = c
        m = p - 1 - j
        if m > bw:
            m = bw
        if m == 0:
            continue
        for t in range(1, m + 1):
            ab[t, j] /= c
        for t in range(1, m + 1):
            v = ab[t, j]
            for r in range(t, m + 1):
                ab[r - t, j + t] -= ab[r, j] * v
    return 0


cdef void _forward(double[:, ::1] ab, double[::1] x) noexcept nogil:
    cdef Py_ssize_t bw = ab.shape[0] - 1
    cdef Py_ssize_t p = ab.shape[1]
    cdef Py_ssize_t j, d, m
    cdef double xj
    for j in range(p):
        xj = x[j] / ab[0, j]
        x[j] = xj
        m = p - 1 - j
        if m > bw:
            m = bw
        for d in range(1, m + 1):
            x[j + d] -= xj * ab[d, j]


cdef void _backward(double[:, ::1] ab, double[::1] x) noexcept nogil:
    cdef Py_ssize_t bw = ab.shape[0] - 1
    cdef Py_ssize_t p = ab.shape[1]
    cdef Py_ssize_t j, d, m
    cdef double s
    for j in range(p - 1, -1, -1):
        m = p - 1 - j
        if m > bw:
            m = bw
        s = x[j]
        for d in range(1, m + 1):
            s -= ab[d, j] * x[j + d]
        x[j] = s / ab[0, j]


def cholesky_band(double[:, ::1] ab):
    """Factor an SPD band matrix in place; 0 on success, else failing column."""
    cdef Py_ssize_t info
    with nogil:
        info = _cholesky(ab)
    return int(info)


def solve_band(double[:, ::1] ab, b):
    """Solve A x = b given the factor produced by cholesky_band."""
    x = np.array(b, dtype=np.float64)
    cdef double[::1] xv = x
    with nogil:
        _forward(ab, xv)
        _backward(ab, xv)
    return x


def backsolve_band(double[:, ::1] ab, b):
    """Solve Lᵀ x = b given the factor produced by cholesky_band."""
    x = np.array(b, dtype=np.float64)
    cdef double[::1] xv = x
    with nogil:
        _backward(ab, xv)
    return x
