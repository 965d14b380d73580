"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise the numpy
fallback is used. Set ``CHEVRON_PURE_PYTHON=1`` to force the fallback.
"""

import os

import numpy as np

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("CHEVRON_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"


def use_backend(name):
    """Switch between ``"cython"`` and ``"python"`` kernels at runtime."""
    global _impl, BACKEND
    if name == "python":
        _impl, BACKEND = _kernels_py, "python"
    elif name == "cython":
        from . import _kernels as compiled

        _impl, BACKEND = compiled, "cython"
    else:
        raise ValueError(f"unknown backend {name!r}")


class TridiagonalFactor:
    """LU factorization of a batch of tridiagonal systems of equal length.

    Arrays have shape ``(batch, n)``; ``lower[:, 0]`` and ``upper[:, -1]``
    are ignored.
    """

    def __init__(self, lower, diag, upper):
        shape = np.broadcast_shapes(np.shape(lower), np.shape(diag), np.shape(upper))
        self.lower = np.ascontiguousarray(np.broadcast_to(lower, shape), dtype=np.complex128)
        d = np.ascontiguousarray(np.broadcast_to(diag, shape), dtype=np.complex128)
        u = np.ascontiguousarray(np.broadcast_to(upper, shape), dtype=np.complex128)
        self.cp, self.inv = _impl.tridiag_factor(self.lower, d, u)

    @property
    def shape(self):
        return self.lower.shape

    def solve(self, rhs):
        rhs = np.ascontiguousarray(rhs, dtype=np.complex128)
        return _impl.tridiag_solve(self.lower, self.cp, self.inv, rhs)


def renormalize(n):
    """Return the director array ``n`` (shape ``(3, ...)``) scaled to unit length."""
    out = np.ascontiguousarray(n, dtype=np.float64).copy()
    _impl.renormalize(out.reshape(3, -1))
    return out
