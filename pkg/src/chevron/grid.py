"""Sample-domain discretization.

The domain is ``(-l, l)`` along each periodic axis (``x`` and optionally
``y``) and ``[-1, 1]`` along the optional bounded axis ``z``.  Arrays are
laid out in ``(x, y, z)`` index order with absent axes dropped, so a
cross-section grid without ``y`` has arrays of shape ``(n_x, n_z)``.

Periodic axes are differentiated spectrally; the bounded axis uses
second-order finite differences with Dirichlet values stored in the first
and last planes of every field.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.fft as sfft

from .kernels import TridiagonalFactor, renormalize

PERIODIC = "periodic"
DIRICHLET = "dirichlet"

SNAPSHOT_MAGIC = "chevron-snapshot"


class GridError(ValueError):
    """Invalid grid construction or mismatched grids."""


def _is_pow2(n):
    return n > 0 and n & (n - 1) == 0


@dataclass(frozen=True)
class Grid:
    """Rectangular grid: periodic ``x`` (and ``y``), bounded ``z``.

    ``l`` is the half-width of the periodic axes.  A count of 0 means the
    axis is absent; ``n_x`` is always present.
    """

    l: float
    n_x: int
    n_y: int = 0
    n_z: int = 0

    def __post_init__(self):
        if not self.l > 0:
            raise GridError(f"half-width l must be positive, got {self.l}")
        for name, n in (("n_x", self.n_x), ("n_y", self.n_y)):
            if name == "n_x" or n:
                if n < 4 or not _is_pow2(n):
                    raise GridError(f"{name}={n}: periodic counts must be powers of two >= 4")
        if self.n_z and self.n_z < 3:
            raise GridError(f"n_z={self.n_z}: a dirichlet axis needs at least 3 points")

    @property
    def half_width_l(self):
        return self.l

    @property
    def axes(self):
        return tuple(a for a, n in zip("xyz", (self.n_x, self.n_y, self.n_z)) if n)

    @property
    def periodic_axes(self):
        return tuple(a for a in self.axes if a != "z")

    @property
    def has_z(self):
        return self.n_z > 0

    @property
    def shape(self):
        return tuple(self.count(a) for a in self.axes)

    @property
    def size(self):
        return int(np.prod(self.shape))

    def count(self, axis):
        return {"x": self.n_x, "y": self.n_y, "z": self.n_z}[axis]

    def index(self, axis):
        try:
            return self.axes.index(axis)
        except ValueError:
            raise GridError(f"axis {axis!r} not on grid with axes {self.axes}") from None

    def boundary(self, axis):
        self.index(axis)
        return DIRICHLET if axis == "z" else PERIODIC

    def spacing(self, axis):
        n = self.count(axis)
        if axis == "z":
            return 2.0 / (n - 1)
        return 2.0 * self.l / n

    def coords(self, axis):
        n = self.count(axis)
        if axis == "z":
            return np.linspace(-1.0, 1.0, n)
        return -self.l + self.spacing(axis) * np.arange(n)

    def mesh(self):
        """Coordinate arrays broadcast to the full grid shape, one per axis."""
        return np.meshgrid(*(self.coords(a) for a in self.axes), indexing="ij")

    def wavenumbers(self, axis):
        """Angular wavenumbers in numpy FFT order (``rfft`` order for ``x``)."""
        n = self.count(axis)
        d = self.spacing(axis)
        if axis == "x":
            return 2 * np.pi * np.fft.rfftfreq(n, d)
        return 2 * np.pi * np.fft.fftfreq(n, d)

    def periodic_area(self):
        """Cell area of the periodic axes (rectangle rule)."""
        return float(np.prod([self.spacing(a) for a in self.periodic_axes]))

    def z_weights(self):
        """Trapezoid weights along ``z``."""
        w = np.full(self.n_z, self.spacing("z"))
        w[0] = w[-1] = 0.5 * self.spacing("z")
        return w

    def weights(self):
        """Quadrature weights on the full grid (rectangle x/y, trapezoid z)."""
        w = np.full(self.shape, self.periodic_area())
        if self.has_z:
            w = w * self.z_weights()
        return w

    def volume(self):
        v = (2 * self.l) ** len(self.periodic_axes)
        return v * 2.0 if self.has_z else v

    def describe(self):
        return {
            "l": self.l,
            "n_x": self.n_x,
            "n_y": self.n_y,
            "n_z": self.n_z,
            "boundary": {a: self.boundary(a) for a in self.axes},
        }


def make_grid(l, n_x, n_y=0, n_z=0, boundary=None):
    """Build a :class:`Grid`; ``boundary`` may restate the per-axis tags."""
    grid = Grid(float(l), int(n_x), int(n_y), int(n_z))
    for axis, tag in (boundary or {}).items():
        if tag != grid.boundary(axis):
            raise GridError(f"axis {axis!r} must be {grid.boundary(axis)}, got {tag!r}")
    return grid


@dataclass(frozen=True)
class ScalarField:
    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.shape != self.grid.shape:
            raise GridError(f"values shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __add__(self, other):
        return ScalarField(self.grid, self.values + _values(other, self.grid))

    def __sub__(self, other):
        return ScalarField(self.grid, self.values - _values(other, self.grid))

    def __mul__(self, c):
        return ScalarField(self.grid, self.values * c)

    __rmul__ = __mul__


@dataclass(frozen=True)
class DirectorField:
    """Unit-vector field; ``n`` has shape ``(3,) + grid.shape``."""

    grid: Grid
    n: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.n, dtype=np.float64)
        if v.shape != (3,) + self.grid.shape:
            raise GridError(f"director shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("director contains non-finite values")
        err = np.max(np.abs(np.einsum("i...,i...->...", v, v) - 1.0))
        if err > 1e-12:
            raise ValueError(f"director is not unit length (max deviation {err:.3g})")
        v.setflags(write=False)
        object.__setattr__(self, "n", v)

    @classmethod
    def from_components(cls, grid, n1, n2, n3, normalize=True):
        arr = np.stack([np.broadcast_to(np.asarray(c, dtype=np.float64), grid.shape) for c in (n1, n2, n3)])
        if normalize:
            arr = renormalize(arr)
        return cls(grid, arr)

    def component(self, i):
        return ScalarField(self.grid, self.n[i])


def _values(f, grid):
    if isinstance(f, ScalarField):
        if f.grid != grid:
            raise GridError("fields live on different grids")
        return f.values
    return f


def check_same_grid(*fields):
    grids = {f.grid for f in fields}
    if len(grids) != 1:
        raise GridError("fields live on different grids")
    return grids.pop()


# -- spectral helpers on raw arrays --------------------------------------------


def spectral_diff(values, grid, axis, order=1):
    """Spectral derivative of a raw array along a periodic axis.

    Odd-order derivatives drop the Nyquist mode, which keeps the first
    derivative an antisymmetric real operator.
    """
    ax = grid.index(axis)
    n = grid.count(axis)
    k = 2 * np.pi * np.fft.rfftfreq(n, grid.spacing(axis))
    sym = (1j * k) ** order
    if order % 2 == 1 and n % 2 == 0:
        sym[-1] = 0.0
    shape = [1] * values.ndim
    shape[ax] = len(k)
    coeff = sfft.rfft(values, axis=ax) * sym.reshape(shape)
    return sfft.irfft(coeff, n=n, axis=ax)


def spectral_antiderivative(values, grid, axis):
    """Zero-mean periodic antiderivative along a periodic axis.

    The mean of ``values`` (which has no periodic antiderivative) and the
    Nyquist mode are discarded.
    """
    ax = grid.index(axis)
    n = grid.count(axis)
    k = 2 * np.pi * np.fft.rfftfreq(n, grid.spacing(axis))
    sym = np.zeros_like(k, dtype=complex)
    sym[1:] = 1.0 / (1j * k[1:])
    if n % 2 == 0:
        sym[-1] = 0.0
    shape = [1] * values.ndim
    shape[ax] = len(k)
    coeff = sfft.rfft(values, axis=ax) * sym.reshape(shape)
    return sfft.irfft(coeff, n=n, axis=ax)


def z_diff(values, grid, order=1):
    """Second-order finite differences along ``z`` with one-sided closure at the walls."""
    ax = grid.index("z")
    u = np.moveaxis(values, ax, -1)
    h = grid.spacing("z")
    out = np.empty_like(u)
    if order == 1:
        out[..., 1:-1] = (u[..., 2:] - u[..., :-2]) / (2 * h)
        out[..., 0] = (-3 * u[..., 0] + 4 * u[..., 1] - u[..., 2]) / (2 * h)
        out[..., -1] = (3 * u[..., -1] - 4 * u[..., -2] + u[..., -3]) / (2 * h)
    else:
        if u.shape[-1] < 4:
            raise GridError("second z-derivative needs n_z >= 4")
        out[..., 1:-1] = (u[..., 2:] - 2 * u[..., 1:-1] + u[..., :-2]) / h**2
        out[..., 0] = (2 * u[..., 0] - 5 * u[..., 1] + 4 * u[..., 2] - u[..., 3]) / h**2
        out[..., -1] = (2 * u[..., -1] - 5 * u[..., -2] + 4 * u[..., -3] - u[..., -4]) / h**2
    return np.moveaxis(out, -1, ax)


# -- public field operations -------------------------------------------------------


def diff(f, axis, order=1):
    """Derivative of a scalar field: spectral on periodic axes, FD on ``z``."""
    if order not in (1, 2):
        raise ValueError(f"derivative order must be 1 or 2, got {order}")
    grid = f.grid
    if grid.boundary(axis) == PERIODIC:
        return ScalarField(grid, spectral_diff(f.values, grid, axis, order))
    return ScalarField(grid, z_diff(f.values, grid, order))


def antiderivative(f, axis):
    """Zero-mean spectral antiderivative along a periodic axis."""
    if f.grid.boundary(axis) != PERIODIC:
        raise GridError("antiderivative is defined on periodic axes only")
    return ScalarField(f.grid, spectral_antiderivative(f.values, f.grid, axis))


def laplacian(f):
    """Discrete Laplacian: spectral on periodic axes plus the ``z`` stencil."""
    return ScalarField(f.grid, sum(diff(f, a, 2).values for a in f.grid.axes))


def integrate(f):
    """Rectangle rule on periodic axes, trapezoid rule on ``z``."""
    values = f.values if isinstance(f, ScalarField) else f
    grid = f.grid
    return float(np.sum(values * grid.weights()))


# -- implicit solves ---------------------------------------------------------------


def _to_modes(values, grid):
    c = sfft.rfft(values, axis=0)
    if grid.n_y:
        c = sfft.fft(c, axis=1)
    return c


def _from_modes(c, grid):
    if grid.n_y:
        c = sfft.ifft(c, axis=1)
    return sfft.irfft(c, n=grid.n_x, axis=0)


def mode_ksq(grid, first_derivative=False):
    """``kx^2 + ky^2`` on the mode layout (without ``z``).

    With ``first_derivative`` the Nyquist entries are zero, matching the
    symbol of a squared spectral first derivative.
    """
    ks = []
    for axis in grid.periodic_axes:
        k = grid.wavenumbers(axis).copy()
        if first_derivative and grid.count(axis) % 2 == 0:
            k[grid.count(axis) // 2 if axis != "x" else -1] = 0.0
        ks.append(k)
    if len(ks) == 1:
        return ks[0] ** 2
    return ks[0][:, None] ** 2 + ks[1][None, :] ** 2


class ShiftedLaplacianSolver:
    """Solve ``(I - r Δ_h) u = f`` with ``Δ_h`` spectral in x/y, 3-point in z.

    ``r`` may be complex (used to factor higher-order polynomials of the
    Laplacian).  On grids with a bounded axis the first and last ``z``
    planes of ``f`` are taken as the Dirichlet values of ``u``.
    """

    def __init__(self, grid, r, first_derivative=False):
        self.grid = grid
        self.r = r
        self.ksq = mode_ksq(grid, first_derivative)
        if grid.has_z:
            m = grid.n_z - 2
            h2 = grid.spacing("z") ** 2
            diag = (1.0 + r * self.ksq.reshape(-1, 1) + 2 * r / h2) * np.ones((1, m))
            off = np.full_like(diag, -r / h2)
            self._factor = TridiagonalFactor(off, diag, off)
            self._coupling = r / h2

    def solve_modes(self, c):
        if not self.grid.has_z:
            return c / (1.0 + self.r * self.ksq)
        shape = c.shape
        flat = c.reshape(-1, shape[-1])
        rhs = flat[:, 1:-1].copy()
        rhs[:, 0] += self._coupling * flat[:, 0]
        rhs[:, -1] += self._coupling * flat[:, -1]
        out = np.empty_like(flat)
        out[:, 0] = flat[:, 0]
        out[:, -1] = flat[:, -1]
        out[:, 1:-1] = self._factor.solve(rhs)
        return out.reshape(shape)

    def solve(self, values):
        return _from_modes(self.solve_modes(_to_modes(values, self.grid)), self.grid)


@lru_cache(maxsize=64)
def _helmholtz_solver(grid, a):
    return ShiftedLaplacianSolver(grid, a)


def helmholtz_solve(rhs, a):
    """Solve ``(I - a Δ_h) u = rhs`` for ``a >= 0``.

    Diagonal in Fourier space on periodic axes, tridiagonal along ``z``
    with the Dirichlet values read from the wall planes of ``rhs``.
    """
    if a < 0:
        raise ValueError(f"coefficient must be nonnegative, got {a}")
    if a == 0:
        return ScalarField(rhs.grid, rhs.values.copy())
    u = _helmholtz_solver(rhs.grid, float(a)).solve(rhs.values)
    return ScalarField(rhs.grid, u)


def helmholtz_apply(u, a):
    """Forward operator ``(I - a Δ_h) u`` (interior rows; walls returned unchanged)."""
    grid = u.grid
    v = u.values
    lap = sum(spectral_diff(v, grid, ax, 2) for ax in grid.periodic_axes)
    out = v - a * lap
    if grid.has_z:
        out = out - a * z_diff(v, grid, 2)
        out = np.moveaxis(out, grid.index("z"), -1)
        vz = np.moveaxis(v, grid.index("z"), -1)
        out[..., 0] = vz[..., 0]
        out[..., -1] = vz[..., -1]
        out = np.moveaxis(out, -1, grid.index("z"))
    return ScalarField(grid, out)


# -- snapshots ---------------------------------------------------------------------


def write_snapshot(path, fields, time=0.0, extra=None):
    """Write named fields to one snapshot file.

    The file is a single line of JSON (grid, field names, component counts,
    time stamp) followed by little-endian float64 data, field after field,
    component after component, each in x-fastest order.
    """
    grid = check_same_grid(*fields.values())
    entries = []
    payload = []
    for name, f in fields.items():
        arr = f.n if isinstance(f, DirectorField) else f.values[None]
        entries.append({"name": name, "components": int(arr.shape[0])})
        for comp in arr:
            payload.append(np.asarray(comp, dtype="<f8").ravel(order="F"))
    header = {
        "format": SNAPSHOT_MAGIC,
        "version": 1,
        "grid": grid.describe(),
        "time": float(time),
        "fields": entries,
        "dtype": "<f8",
        "order": "x-fastest",
    }
    if extra:
        header["extra"] = extra
    with open(path, "wb") as fh:
        fh.write((json.dumps(header) + "\n").encode("utf-8"))
        for p in payload:
            fh.write(p.tobytes())


def read_snapshot(path):
    """Inverse of :func:`write_snapshot`: returns ``(grid, fields, header)``."""
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        if header.get("format") != SNAPSHOT_MAGIC:
            raise ValueError(f"{path}: not a snapshot file")
        data = np.frombuffer(fh.read(), dtype="<f8")
    g = header["grid"]
    grid = make_grid(g["l"], g["n_x"], g["n_y"], g["n_z"], g.get("boundary"))
    fields = {}
    pos = 0
    for entry in header["fields"]:
        comps = []
        for _ in range(entry["components"]):
            comps.append(data[pos : pos + grid.size].reshape(grid.shape, order="F"))
            pos += grid.size
        if entry["components"] == 3:
            fields[entry["name"]] = DirectorField(grid, np.stack(comps))
        else:
            fields[entry["name"]] = ScalarField(grid, comps[0])
    if pos != data.size:
        raise ValueError(f"{path}: payload has {data.size} values, header implies {pos}")
    return grid, fields, header


def line_slice(values, grid, axis="x", at=None):
    """Extract a 1D line along ``axis`` through the grid point nearest ``at``."""
    at = at or {}
    index = []
    for a in grid.axes:
        if a == axis:
            index.append(slice(None))
        else:
            c = grid.coords(a)
            index.append(int(np.argmin(np.abs(c - at.get(a, 0.0)))))
    lead = (slice(None),) * (values.ndim - len(grid.shape))
    return values[lead + tuple(index)]


def write_slice_csv(path, columns):
    """Write equally long 1D arrays as CSV columns with 17 significant digits."""
    names = list(columns)
    data = np.column_stack([np.asarray(columns[k], dtype=float) for k in names])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for row in data:
            w.writerow([f"{v:.17g}" for v in row])
