"""Pure-NumPy banded Cholesky kernels (fallback for the compiled core).

Symmetric positive definite matrices are stored in lower band form: for a
matrix A of order p with bandwidth bw, ``ab`` has shape ``(bw + 1, p)`` and

    ab[d, j] == A[j + d, j]   for 0 <= d <= bw, j + d < p.

Entries past the matrix edge are ignored. ``cholesky_band`` overwrites ``ab``
with the lower factor L (same layout) of A = L Lᵀ.

Functions
---------
cholesky_band : in-place banded Cholesky factorization
solve_band : solve A x = b given the factor
backsolve_band : solve Lᵀ x = b given the factor (covariance whitening)
"""

import math

import numpy as np

__all__ = ["cholesky_band", "solve_band", "backsolve_band"]


def cholesky_band(ab):
    """Factor an SPD band matrix in place.

    Parameters
    ----------
    ab : ndarray, shape (bw + 1, p)
        Lower band of A; overwritten with the lower band of L.

    Returns
    -------
    int
        0 on success, or the 1-based column index at which the pivot
        was not positive (matrix not positive definite).
    """
    bw = ab.shape[0] - 1
    p = ab.shape[1]
    for j in range(p):
        pivot = ab[0, j]
        if not pivot > 0.0:
            return j + 1
        c = math.sqrt(pivot)
        ab[0, j] = c
        m = min(bw, p - 1 - j)
        if m == 0:
            continue
        col = ab[1 : m + 1, j]
        col /= c
        # Rank-1 update of the trailing band: A[i,l] -= L[i,j] L[l,j]
        # for j < l <= i <= j + m.
        for t in range(1, m + 1):
            ab[0 : m - t + 1, j + t] -= col[t - 1 :] * col[t - 1]
    return 0


def _forward(ab, x):
    bw = ab.shape[0] - 1
    p = ab.shape[1]
    for j in range(p):
        xj = x[j] / ab[0, j]
        x[j] = xj
        m = min(bw, p - 1 - j)
        if m:
            x[j + 1 : j + m + 1] -= xj * ab[1 : m + 1, j]


def _backward(ab, x):
    bw = ab.shape[0] - 1
    p = ab.shape[1]
    for j in range(p - 1, -1, -1):
        m = min(bw, p - 1 - j)
        if m:
            x[j] -= ab[1 : m + 1, j] @ x[j + 1 : j + m + 1]
        x[j] /= ab[0, j]


def solve_band(ab, b):
    """Solve A x = b given the factor produced by :func:`cholesky_band`."""
    x = np.array(b, dtype=np.float64)
    _forward(ab, x)
    _backward(ab, x)
    return x


def backsolve_band(ab, b):
    """Solve Lᵀ x = b given the factor produced by :func:`cholesky_band`."""
    x = np.array(b, dtype=np.float64)
    _backward(ab, x)
    return x
