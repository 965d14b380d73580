"""Discrete free energies and their exact discrete gradients.

Gradients are derived from the discretized sums (discretize, then
differentiate), so a central finite difference of any energy agrees with
the returned gradient up to rounding.

Layouts
-------
torus
    Fully periodic ``(x, y)`` grid with a displacement ``g`` and director
    ``n``; compression uses ``grad g + n_par``.
slab
    Periodic ``x`` (and optionally ``y``) with bounded ``z``; layer phase
    ``phi`` and director ``n``; compression uses ``grad phi - n``.  The
    ``z`` derivatives of ``phi`` and ``n`` live on cell midpoints, which
    keeps the discrete compression free of checkerboard null modes.
line
    1D periodic ``x`` with an angle ``theta`` and displacement ``g``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import DirectorField, GridError, ScalarField, check_same_grid, spectral_diff
from .potentials import (
    ParameterError,
    angle_well,
    phi_transform,
    w_cl_2d_raw,
    w_cl_theta,
    w_cl_theta_prime,
    w_degennes_raw,
)

TERMS = ("compression", "bending", "well", "magnetic", "second_order", "quartic", "cross")

MODELS = ("dg2d", "dg3d", "cl1d", "cl3d")


@dataclass(frozen=True)
class ModelParams:
    """Nondimensional controls.

    Give ``sigma`` (torus and line models) or ``tau`` (slab models) or
    both; the missing one follows from ``sigma = tau * epsilon``.
    """

    epsilon: float
    sigma: float | None = None
    tau: float | None = None
    D1: float = 0.0
    D2: float = 0.0
    h: tuple = (1.0, 0.0, 0.0)

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ParameterError(f"epsilon must be positive, got {self.epsilon}")
        if self.sigma is None and self.tau is None:
            object.__setattr__(self, "sigma", 0.0)
        if self.sigma is not None and self.tau is not None:
            if not np.isclose(self.tau * self.epsilon, self.sigma, rtol=1e-12, atol=1e-15):
                raise ParameterError(f"tau * epsilon = {self.tau * self.epsilon} differs from sigma = {self.sigma}")
        if self.sigma_value < 0:
            raise ParameterError(f"sigma must be nonnegative, got {self.sigma_value}")
        if self.D1 < 0 or self.D2 < 0:
            raise ParameterError("D1 and D2 must be nonnegative")
        h = np.asarray(self.h, dtype=float)
        if h.shape != (3,) or abs(np.linalg.norm(h) - 1) > 1e-12:
            raise ParameterError(f"field direction h must be a unit 3-vector, got {self.h}")
        object.__setattr__(self, "h", tuple(float(c) for c in h))

    @property
    def sigma_value(self):
        return self.sigma if self.sigma is not None else self.tau * self.epsilon

    @property
    def tau_value(self):
        return self.tau if self.tau is not None else self.sigma / self.epsilon

    def as_dict(self):
        return {
            "epsilon": self.epsilon,
            "sigma": self.sigma_value,
            "tau": self.tau_value,
            "D1": self.D1,
            "D2": self.D2,
            "h": list(self.h),
        }


@dataclass(frozen=True)
class EnergyBreakdown:
    total: float
    terms: dict = field(default_factory=dict)
    admissible: bool = True

    def as_dict(self):
        return {"total": self.total, "terms": dict(self.terms), "admissible": self.admissible}


def _breakdown(terms, admissible=True):
    full = {k: float(terms.get(k, 0.0)) for k in TERMS}
    return EnergyBreakdown(float(sum(full.values())), full, admissible)


def project(n, f):
    """Tangential projection ``f - (n . f) n`` (arrays of shape ``(3, ...)``)."""
    return f - np.einsum("i...,i...->...", n, f) * n


# -- torus ---------------------------------------------------------------------------


def _torus_axes(grid):
    if grid.has_z:
        raise GridError("torus energies need a fully periodic grid")
    return [(grid.index(a), i) for i, a in enumerate(grid.periodic_axes)]


def torus_energy(n, g, grid, p, model="dg2d", grad=False):
    """Torus energy terms and optionally the partials ``(dE/dn, dE/dg)``.

    ``model`` is ``"dg2d"`` (de Gennes well) or ``"cl2d"`` (Chen-Lubensky
    with the sphere well ``W(n)`` of the 2D reduction).
    """
    eps = p.epsilon
    sigma = p.sigma_value
    w = grid.periodic_area()
    axes = _torus_axes(grid)
    d = lambda u, a: spectral_diff(u, grid, grid.axes[a], 1)  # noqa: E731
    e = [d(g, a) + n[c] for a, c in axes]
    dn_ = [[d(n[i], a) for a, _ in axes] for i in range(3)]
    esq = sum(ei**2 for ei in e)
    terms = {
        "compression": w / eps * np.sum(esq),
        "bending": w * eps * sum(np.sum(x**2) for row in dn_ for x in row),
    }
    cl = model == "cl2d"
    if cl:
        spec = angle_well(sigma, p.D2)
        well = w_cl_2d_raw(n[0], n[1], n[2], spec)
        r = sum(d(ei, a) for ei, (a, _) in zip(e, axes))
        v2 = (1.0 - n[2]) ** 2
        terms["second_order"] = w * p.D1 * eps * np.sum(r**2)
        terms["quartic"] = w * p.D2 / (2 * eps) * np.sum(esq**2)
        terms["cross"] = w * p.D2 / eps * np.sum(v2 * esq)
    elif model == "dg2d":
        well = w_degennes_raw(n[0], n[1], n[2], sigma)
    else:
        raise ValueError(f"unknown torus model {model!r}")
    terms["well"] = w / eps * np.sum(well)
    if not grad:
        return terms

    gn = np.zeros_like(n)
    gg = np.zeros_like(g)
    de = [2 * w / eps * ei for ei in e]
    if cl:
        de = [x + 2 * w * p.D2 / eps * esq * ei + 2 * w * p.D2 / eps * v2 * ei for x, ei in zip(de, e)]
        gr = 2 * w * p.D1 * eps * r
        de = [x - d(gr, a) for x, (a, _) in zip(de, axes)]
        gn[2] += -2 * w * p.D2 / eps * (1.0 - n[2]) * esq
        gn[1] += w / eps * 2 * spec.sigma * n[1]
        gn[2] += w / eps * (-(2 * spec.D2) * (1 - n[2]) ** 3 - 2 * (1 - n[2]) + 2 * spec.sigma * n[2])
    else:
        A = 1.0 / (1.0 + sigma)
        gn[1] += w / eps * 2 * sigma * n[1]
        gn[2] += w / eps * 2 * (n[2] - A) / A
    for x, (a, c) in zip(de, axes):
        gg -= d(x, a)
        gn[c] += x
    for i in range(3):
        for (a, _), di in zip(axes, dn_[i]):
            gn[i] -= 2 * w * eps * d(di, a)
    return terms, gn, gg


def energy_degennes_2d(n, g, p):
    """De Gennes torus energy of a director ``n`` and displacement ``g``."""
    grid = check_same_grid(n, g)
    terms = torus_energy(n.n, g.values, grid, p, "dg2d")
    return _breakdown(terms, _mean_n1_zero(n))


def energy_cl_2d(n, g, p):
    """Chen-Lubensky torus energy (sphere-valued director, displacement ``g``)."""
    grid = check_same_grid(n, g)
    terms = torus_energy(n.n, g.values, grid, p, "cl2d")
    return _breakdown(terms, _mean_n1_zero(n))


def _mean_n1_zero(n, tol=1e-8):
    return bool(abs(np.mean(n.n[0])) < tol)


# -- slab ------------------------------------------------------------------------------


class SlabOps:
    """Staggered-z operators for slab grids (``z`` is the last array axis)."""

    def __init__(self, grid):
        if not grid.has_z or grid.axes[-1] != "z":
            raise GridError("slab energies need a grid with a bounded z axis")
        self.grid = grid
        self.h = grid.spacing("z")
        self.area = grid.periodic_area()
        self.wn = self.area * grid.z_weights()
        self.wc = self.area * self.h
        self.periodic = [(grid.index(a), i) for i, a in enumerate(grid.periodic_axes)]

    def dp(self, u, a):
        return spectral_diff(u, self.grid, self.grid.axes[a], 1)

    def dz(self, u):
        return (u[..., 1:] - u[..., :-1]) / self.h

    def dzT(self, c):
        out = np.zeros(c.shape[:-1] + (c.shape[-1] + 1,))
        out[..., :-1] -= c / self.h
        out[..., 1:] += c / self.h
        return out

    def az(self, u):
        return 0.5 * (u[..., 1:] + u[..., :-1])

    def azT(self, c):
        out = np.zeros(c.shape[:-1] + (c.shape[-1] + 1,))
        out[..., :-1] += 0.5 * c
        out[..., 1:] += 0.5 * c
        return out

    def cell_to_node(self, c):
        """Average of adjacent cells; wall nodes take their single cell."""
        out = np.empty(c.shape[:-1] + (c.shape[-1] + 1,))
        out[..., 1:-1] = 0.5 * (c[..., 1:] + c[..., :-1])
        out[..., 0] = c[..., 0]
        out[..., -1] = c[..., -1]
        return out

    def cell_to_node_T(self, u):
        out = np.zeros(u.shape[:-1] + (u.shape[-1] - 1,))
        out[..., 1:] += 0.5 * u[..., 1:-1]
        out[..., :-1] += 0.5 * u[..., 1:-1]
        out[..., 0] += u[..., 0]
        out[..., -1] += u[..., -1]
        return out

    def interior_weight(self):
        return self.area * self.h


def slab_energy(n, phi, ops, p, grad=False):
    """Slab energy terms ``(1/eps)|grad phi - n|^2 + eps|grad n|^2 - tau (n.h)^2``.

    With ``D1`` or ``D2`` positive the Chen-Lubensky terms
    ``D1 eps (lap phi - div n)^2 + D2/(2 eps) |grad phi - n|^4`` are added.
    Returns the terms and, with ``grad``, the partials ``(dE/dn, dE/dphi)``
    over all nodes including the walls.
    """
    eps = p.epsilon
    tau = p.tau_value
    h = np.asarray(p.h)
    wn, wc = ops.wn, ops.wc
    ep = [ops.dp(phi, a) - n[c] for a, c in ops.periodic]
    ez = ops.dz(phi) - ops.az(n[2])
    terms = {
        "compression": (sum(np.sum(wn * x**2) for x in ep) + wc * np.sum(ez**2)) / eps,
    }
    dpn = [[ops.dp(n[i], a) for a, _ in ops.periodic] for i in range(3)]
    dzn = [ops.dz(n[i]) for i in range(3)]
    terms["bending"] = eps * (
        sum(np.sum(wn * x**2) for row in dpn for x in row) + wc * sum(np.sum(x**2) for x in dzn)
    )
    nh = np.einsum("i...,i->...", n, h)
    terms["magnetic"] = -tau * np.sum(wn * nh**2)
    cl2 = p.D2 > 0
    cl1 = p.D1 > 0
    if cl1:
        r = sum(ops.dp(x, a) for x, (a, _) in zip(ep, ops.periodic))
        r = r[..., 1:-1] + (ez[..., 1:] - ez[..., :-1]) / ops.h
        wi = ops.interior_weight()
        terms["second_order"] = p.D1 * eps * wi * np.sum(r**2)
    if cl2:
        S = sum(x**2 for x in ep) + ops.cell_to_node(ez**2)
        terms["quartic"] = p.D2 / (2 * eps) * np.sum(wn * S**2)
    if not grad:
        return terms

    dep = [2 / eps * wn * x for x in ep]
    dez = 2 / eps * wc * ez
    if cl2:
        dep = [y + 2 * p.D2 / eps * wn * S * x for y, x in zip(dep, ep)]
        dez = dez + 2 * ez * ops.cell_to_node_T(p.D2 / eps * wn * S)
    if cl1:
        gr = np.zeros_like(phi)
        gr[..., 1:-1] = 2 * p.D1 * eps * wi * r
        dep = [y - ops.dp(gr, a) for y, (a, _) in zip(dep, ops.periodic)]
        dez = dez + (gr[..., :-1] - gr[..., 1:]) / ops.h
    gphi = ops.dzT(dez)
    gn = np.zeros_like(n)
    for y, (a, c) in zip(dep, ops.periodic):
        gphi -= ops.dp(y, a)
        gn[c] -= y
    gn[2] -= ops.azT(dez)
    for i in range(3):
        for (a, _), x in zip(ops.periodic, dpn[i]):
            gn[i] -= 2 * eps * ops.dp(wn * x, a)
        gn[i] += 2 * eps * wc * ops.dzT(dzn[i])
    gn -= 2 * tau * wn * nh * h.reshape((3,) + (1,) * (n.ndim - 1))
    return terms, gn, gphi


def energy_degennes_3d(n, phi, p):
    """Layer-phase energy on a slab grid (3D or the y-independent x-z section)."""
    grid = check_same_grid(n, phi)
    q = ModelParams(p.epsilon, tau=p.tau_value, h=p.h)
    return _breakdown(slab_energy(n.n, phi.values, SlabOps(grid), q))


def energy_cl_3d(n, phi, p):
    """Chen-Lubensky layer-phase energy on a slab grid."""
    grid = check_same_grid(n, phi)
    return _breakdown(slab_energy(n.n, phi.values, SlabOps(grid), p))


# -- line --------------------------------------------------------------------------------


def line_energy(theta, g, grid, p, grad=False):
    """1D Chen-Lubensky terms; ``D1 = D2 = 0`` gives the de Gennes circle energy."""
    if grid.axes != ("x",):
        raise GridError("line energies need a 1D periodic grid")
    eps = p.epsilon
    spec = angle_well(p.sigma_value, p.D2)
    w = grid.spacing("x")
    d = lambda u: spectral_diff(u, grid, "x", 1)  # noqa: E731
    e = d(g) + np.sin(theta)
    dth = d(theta)
    s2 = np.sin(0.5 * theta) ** 2
    terms = {
        "compression": w / eps * np.sum(e**2),
        "bending": w * eps * np.sum(dth**2),
        "well": w / eps * np.sum(w_cl_theta(theta, spec)),
    }
    if p.D1 > 0:
        r = d(e)
        terms["second_order"] = w * p.D1 * eps * np.sum(r**2)
    if p.D2 > 0:
        terms["quartic"] = w * p.D2 / (2 * eps) * np.sum(e**4)
        terms["cross"] = w * 4 * p.D2 / eps * np.sum(e**2 * s2**2)
    if not grad:
        return terms
    de = 2 * w / eps * e
    gth = np.zeros_like(theta)
    if p.D1 > 0:
        de = de - d(2 * w * p.D1 * eps * r)
    if p.D2 > 0:
        de = de + 2 * w * p.D2 / eps * e**3 + 8 * w * p.D2 / eps * e * s2**2
        # d/dtheta sin^4(theta/2) = 2 sin^3(theta/2) cos(theta/2)
        gth = gth + 4 * w * p.D2 / eps * e**2 * 2 * np.sin(0.5 * theta) ** 3 * np.cos(0.5 * theta)
    gg = -d(de)
    gth = gth + de * np.cos(theta) - 2 * w * eps * d(dth) + w / eps * w_cl_theta_prime(theta, spec)
    return terms, gth, gg


def energy_cl_1d(theta, g, p):
    """Chen-Lubensky 1D profile energy of an angle ``theta`` and displacement ``g``."""
    grid = check_same_grid(theta, g)
    return _breakdown(line_energy(theta.values, g.values, grid, p))


# -- gradients ---------------------------------------------------------------------------


def variational_gradient(model, state, p):
    """Negative L2 gradients of a discrete energy.

    ``state`` maps field names to fields: ``n`` and ``g`` for ``"dg2d"``,
    ``n`` and ``phi`` for ``"dg3d"`` / ``"cl3d"``, ``theta`` and ``g`` for
    ``"cl1d"``.  The director gradient is projected onto the tangent plane
    of ``n``; wall values of slab fields are fixed and get zero gradient.
    The L2 inner product uses the grid's quadrature weight per unknown.
    """
    if model == "dg2d":
        n, g = state["n"], state["g"]
        grid = check_same_grid(n, g)
        _, gn, gg = torus_energy(n.n, g.values, grid, p, "dg2d", grad=True)
        w = grid.periodic_area()
        return {"n": -project(n.n, gn) / w, "g": -gg / w}
    if model in ("dg3d", "cl3d"):
        n, phi = state["n"], state["phi"]
        grid = check_same_grid(n, phi)
        ops = SlabOps(grid)
        q = p if model == "cl3d" else ModelParams(p.epsilon, tau=p.tau_value, h=p.h)
        _, gn, gphi = slab_energy(n.n, phi.values, ops, q, grad=True)
        w = ops.interior_weight()
        gn = -project(n.n, gn) / w
        gphi = -gphi / w
        for arr in (gn, gphi):
            arr[..., 0] = 0.0
            arr[..., -1] = 0.0
        return {"n": gn, "phi": gphi}
    if model == "cl1d":
        theta, g = state["theta"], state["g"]
        grid = check_same_grid(theta, g)
        _, gth, gg = line_energy(theta.values, g.values, grid, p, grad=True)
        w = grid.spacing("x")
        return {"theta": -gth / w, "g": -gg / w}
    raise ValueError(f"unknown model {model!r}; expected one of {MODELS}")


# -- sharp-interface limits --------------------------------------------------------------


def sharp_interface_energy_dg(jump_count, well, l):
    """``2 c0`` times the total length of ``jump_count`` vertical interfaces of length ``2l``."""
    if jump_count < 0 or jump_count % 2:
        raise ValueError(f"jump_count must be even and nonnegative on the torus, got {jump_count}")
    return 2.0 * well.c0 * jump_count * 2.0 * l


def sharp_interface_energy_cl(jump_count, boundary_mismatch, spec):
    """``Phi(beta)`` per interior jump, plus one more if the end traces differ."""
    if jump_count < 0:
        raise ValueError(f"jump_count must be nonnegative, got {jump_count}")
    return phi_transform(spec.beta, spec) * (jump_count + (1 if boundary_mismatch else 0))


__all__ = [
    "EnergyBreakdown",
    "ModelParams",
    "energy_cl_1d",
    "energy_cl_2d",
    "energy_cl_3d",
    "energy_degennes_2d",
    "energy_degennes_3d",
    "project",
    "sharp_interface_energy_cl",
    "sharp_interface_energy_dg",
    "variational_gradient",
]
