"""Pure-numpy versions of the compiled kernels in ``_kernels.pyx``.

Signatures and results match the Cython module exactly; the loops run
over the system length with the batch dimension vectorized.
"""

import numpy as np


def tridiag_factor(lower, diag, upper):
    nb, n = diag.shape
    cp = np.empty((nb, n), dtype=np.complex128)
    inv = np.empty((nb, n), dtype=np.complex128)
    inv[:, 0] = 1.0 / diag[:, 0]
    cp[:, 0] = upper[:, 0] * inv[:, 0]
    for i in range(1, n):
        inv[:, i] = 1.0 / (diag[:, i] - lower[:, i] * cp[:, i - 1])
        cp[:, i] = upper[:, i] * inv[:, i]
    return cp, inv


def tridiag_solve(lower, cp, inv, rhs):
    nb, n = rhs.shape
    x = np.empty((nb, n), dtype=np.complex128)
    x[:, 0] = rhs[:, 0] * inv[:, 0]
    for i in range(1, n):
        x[:, i] = (rhs[:, i] - lower[:, i] * x[:, i - 1]) * inv[:, i]
    for i in range(n - 2, -1, -1):
        x[:, i] -= cp[:, i] * x[:, i + 1]
    return x


def renormalize(n):
    """Scale each column of a (3, m) array to unit length, in place."""
    n /= np.sqrt(np.einsum("ij,ij->j", n, n))
