"""Gradient-flow time stepping on slab grids.

Both models evolve a layer phase ``phi`` and a director ``n`` with
Dirichlet data ``phi = z``, ``n = e3`` on the walls ``z = +-1``.  The flow
is the L2 gradient flow of half the discrete slab energy, which for the
de Gennes model reads::

    phi_t = (lap phi - div n) / eps
    n_t   = P_n (eps lap n + (grad phi - n) / eps + tau (n.h) h)

Each step solves for increments, so states with zero discrete gradient
are exact fixed points::

    (I + dt M_phi) dphi = dt F_phi(n, phi)
    (I + dt M_n) dn     = dt P_n F_n(n, phi + dphi)
    n <- (n + dn) / |n + dn|

``M_phi`` and ``M_n`` are constant-coefficient stabilizers (diagonal in
Fourier modes, tridiagonal in ``z``): the compression Laplacian for
``phi``, plus the biharmonic term ``D1 eps lap^2`` in the Chen-Lubensky
model, and the bending Laplacian plus a shift for ``n``.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .energy import ModelParams, SlabOps, project, slab_energy
from .grid import DirectorField, ScalarField, ShiftedLaplacianSolver, _from_modes, _to_modes
from .kernels import renormalize

log = logging.getLogger(__name__)

DEGENNES = "dg"
CHEN_LUBENSKY = "cl"


class DivergenceError(RuntimeError):
    """Non-finite values appeared during time stepping."""

    def __init__(self, step, message=""):
        self.step = step
        super().__init__(f"divergence at step {step}" + (f": {message}" if message else ""))


class MonotonicityWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class SimState:
    n: DirectorField
    phi: ScalarField
    time: float = 0.0
    step: int = 0
    energy_history: tuple = ()

    @property
    def grid(self):
        return self.n.grid

    def fields(self):
        return {"n": self.n, "phi": self.phi}


@dataclass(frozen=True)
class FlowConfig:
    dt: float = 1e-3
    t_end: float = 10.0
    tol_steady: float = 1e-9
    snapshot_every: int = 0
    seed: int = 0
    max_halvings: int = 6
    steady_window: int = 100
    steady_rtol: float = 1e-10
    monotone_rtol: float = 1e-8
    max_steps: int = 10**7

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.tol_steady > 0:
            raise ValueError(f"tol_steady must be positive, got {self.tol_steady}")
        if self.t_end < 0:
            raise ValueError(f"t_end must be nonnegative, got {self.t_end}")

    def as_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


# -- initial data --------------------------------------------------------------------


def _band_limited(rng, grid, modes=8, z_modes=4):
    """Random smooth field from the lowest Fourier modes, zero on the walls, max |u| = 1."""
    out = np.zeros(grid.shape)
    mesh = grid.mesh()
    factors = []
    for axis, coord in zip(grid.axes, mesh):
        if axis == "z":
            basis = [np.sin(m * np.pi * (coord + 1) / 2) for m in range(1, z_modes + 1)]
        else:
            k = np.pi / grid.l
            basis = [np.ones_like(coord)] + [
                f(j * k * coord) for j in range(1, modes) for f in (np.cos, np.sin)
            ]
        factors.append(basis)
    shape = tuple(len(b) for b in factors)
    coef = rng.standard_normal(shape)
    for idx in np.ndindex(*shape):
        term = coef[idx]
        for basis, i in zip(factors, idx):
            term = term * basis[i]
        out += term
    peak = np.max(np.abs(out))
    return out / peak if peak > 0 else out


def undeformed_state(grid):
    n = np.zeros((3,) + grid.shape)
    n[2] = 1.0
    phi = grid.mesh()[grid.index("z")].copy()
    return SimState(DirectorField(grid, n), ScalarField(grid, phi))


def initial_condition(grid, p, amplitude=0.1, seed=0):
    """Small random perturbation of the undeformed state ``n = e3``, ``phi = z``."""
    if amplitude < 0:
        raise ValueError(f"amplitude must be nonnegative, got {amplitude}")
    base = undeformed_state(grid)
    if amplitude == 0:
        return base
    rng = np.random.default_rng(seed)
    u1, u2, u3, phi0 = (_band_limited(rng, grid) for _ in range(4))
    n = renormalize(np.stack([amplitude * u1, amplitude * u2, 1.0 + amplitude * u3]))
    for wall in (0, -1):
        n[..., wall] = 0.0
        n[2, ..., wall] = 1.0
    phi = base.phi.values + amplitude * phi0
    phi[..., 0], phi[..., -1] = -1.0, 1.0
    return SimState(DirectorField(grid, n), ScalarField(grid, phi))


# -- stepping ------------------------------------------------------------------------


def _model_params(model, p):
    if model == DEGENNES:
        return ModelParams(p.epsilon, tau=p.tau_value, h=p.h)
    if model == CHEN_LUBENSKY:
        return p
    raise ValueError(f"unknown flow model {model!r}")


class Stepper:
    """Precomputed solvers for one (grid, model, params, dt) combination."""

    def __init__(self, grid, model, p, dt):
        self.grid = grid
        self.model = model
        self.p = _model_params(model, p)
        self.dt = dt
        self.ops = SlabOps(grid)
        self.w = self.ops.interior_weight()
        eps = self.p.epsilon
        # phi: (I + dt (a T + b T^2)), T = -lap_h, factored as (I + r1 T)(I + r2 T)
        a = 1.0 / eps
        b = self.p.D1 * eps
        if b > 0:
            disc = complex(dt * dt * a * a - 4 * dt * b)
            r1 = (dt * a + np.sqrt(disc)) / 2
            r2 = (dt * a - np.sqrt(disc)) / 2
            self._phi_solvers = [ShiftedLaplacianSolver(grid, r1, True), ShiftedLaplacianSolver(grid, r2, True)]
        else:
            self._phi_solvers = [ShiftedLaplacianSolver(grid, dt * a, True)]
        # n: (I + dt (kappa + (eps + D1 eps) T)); the shift kappa bounds the explicit
        # compression stiffness 1/eps and the pointwise multiplier of the projection
        self._kappa_min = 1.0 / eps
        self._n_solvers = {}

    def _n_solver(self, kappa):
        # quantize kappa upward on a 2^(1/4) ladder so solvers are reused
        q = int(np.ceil(4 * np.log2(max(kappa, self._kappa_min) / self._kappa_min) - 1e-12))
        if q not in self._n_solvers:
            c = 1.0 + self.dt * self._kappa_min * 2.0 ** (q / 4)
            r = self.dt * self.p.epsilon * (1.0 + self.p.D1) / c
            self._n_solvers[q] = (ShiftedLaplacianSolver(self.grid, r, True), 1.0 / c)
        return self._n_solvers[q]

    def forces(self, n, phi, multiplier=False):
        """Energy terms and flow velocities ``(F_n, F_phi)`` (wall rows zero).

        With ``multiplier`` also returns ``max |n . F_n^raw|`` over interior
        nodes, the size of the normal force removed by the projection.
        """
        terms, gn, gphi = slab_energy(n, phi, self.ops, self.p, grad=True)
        raw = -0.5 / self.w * gn
        fn = project(n, raw)
        fphi = -0.5 / self.w * gphi
        for arr in (fn, fphi):
            arr[..., 0] = 0.0
            arr[..., -1] = 0.0
        if multiplier:
            lam = np.einsum("i...,i...->...", n, raw)[..., 1:-1]
            return terms, fn, fphi, float(np.max(np.abs(lam)))
        return terms, fn, fphi

    def _solve_phi(self, rhs):
        c = _to_modes(rhs, self.grid)
        for s in self._phi_solvers:
            c = s.solve_modes(c)
        return _from_modes(c, self.grid)

    def velocity_norm(self, fn, fphi):
        return float(np.sqrt(self.w * (np.sum(fn**2) + np.sum(fphi**2))))

    def step(self, n, phi):
        """One step from raw arrays; returns new arrays and the pre-step energy and velocity norm."""
        terms, _, fphi = self.forces(n, phi)
        energy = sum(terms.values())
        dphi = self._solve_phi(self.dt * fphi)
        phi_new = phi + dphi
        _, fn, _, lam = self.forces(n, phi_new, multiplier=True)
        solver, scale = self._n_solver(lam)
        dn = np.stack([solver.solve(scale * self.dt * fn[i]) for i in range(3)])
        n_new = renormalize(n + dn)
        vel = self.velocity_norm(fn, fphi)
        return n_new, phi_new, energy, vel


_STEPPERS = {}


def get_stepper(grid, model, p, dt):
    key = (grid, model, p, float(dt))
    if key not in _STEPPERS:
        if len(_STEPPERS) > 32:
            _STEPPERS.clear()
        _STEPPERS[key] = Stepper(grid, model, p, float(dt))
    return _STEPPERS[key]


def _advance(state, p, cfg, model):
    stepper = get_stepper(state.grid, model, p, cfg.dt)
    n, phi, energy, _ = stepper.step(state.n.n, state.phi.values)
    if not (np.all(np.isfinite(n)) and np.all(np.isfinite(phi))):
        raise DivergenceError(state.step + 1)
    history = state.energy_history
    if not history or history[-1][0] < state.time:
        history = history + ((state.time, energy),)
    return SimState(
        DirectorField(state.grid, n),
        ScalarField(state.grid, phi),
        state.time + cfg.dt,
        state.step + 1,
        history,
    )


def step_degennes(state, p, cfg):
    """One semi-implicit step of the de Gennes flow."""
    return _advance(state, p, cfg, DEGENNES)


def step_cl(state, p, cfg):
    """One semi-implicit step of the Chen-Lubensky flow (biharmonic term implicit)."""
    if state.grid.n_y:
        raise ValueError("the Chen-Lubensky flow runs on an x-z cross-section grid")
    return _advance(state, p, cfg, CHEN_LUBENSKY)


def flow_energy(state, p, model):
    """Discrete slab energy of a state (the functional the flow decreases)."""
    stepper = get_stepper(state.grid, model, p, 1.0)
    return float(sum(slab_energy(state.n.n, state.phi.values, stepper.ops, stepper.p).values()))


def gradient_norm(state, p, model):
    stepper = get_stepper(state.grid, model, p, 1.0)
    _, fn, fphi = stepper.forces(state.n.n, state.phi.values)
    return stepper.velocity_norm(fn, fphi)


@dataclass
class FlowResult:
    state: SimState
    snapshots: list = field(default_factory=list)
    history: np.ndarray = None
    converged: bool = False
    reason: str = ""
    dt: float = 0.0
    halvings: int = 0
    monotonicity_violations: list = field(default_factory=list)
    max_norm_drift: float = 0.0
    final_energy: float = 0.0
    final_gradient_norm: float = 0.0

    def manifest(self, p, cfg, model, extra=None):
        grid = self.state.grid
        out = {
            "model": model,
            "params": p.as_dict(),
            "config": cfg.as_dict(),
            "grid": grid.describe(),
            "dt_used": self.dt,
            "dt_halvings": self.halvings,
            "steps": self.state.step,
            "time": self.state.time,
            "converged": self.converged,
            "stop_reason": self.reason,
            "final_energy": self.final_energy,
            "final_gradient_norm": self.final_gradient_norm,
            "max_norm_drift": self.max_norm_drift,
            "monotonicity_violations": self.monotonicity_violations[:20],
        }
        if extra:
            out.update(extra)
        return out


def run_flow(initial, p, cfg, model=DEGENNES, callback=None):
    """Integrate until ``t_end`` or a steady state.

    Steady state means the discrete velocity norm is below ``tol_steady``
    or the relative energy change over ``steady_window`` steps is below
    ``steady_rtol``.  On divergence the step is retried from the last good
    state with ``dt`` halved, at most ``max_halvings`` times.
    """
    dt = cfg.dt
    halvings = 0
    state = initial
    snapshots = [state] if cfg.snapshot_every else []
    energies = []
    times = []
    violations = []
    drift = 0.0
    converged, reason = False, "t_end"
    stepper = get_stepper(state.grid, model, p, dt)
    n, phi = np.array(state.n.n), np.array(state.phi.values)
    t = state.time
    k = state.step
    t_stop = cfg.t_end * (1 + 1e-12)
    while True:
        if k - state.step >= cfg.max_steps:
            reason = "max_steps"
            break
        try:
            n_new, phi_new, energy, vel = stepper.step(n, phi)
            if not (np.all(np.isfinite(n_new)) and np.all(np.isfinite(phi_new))) or not np.isfinite(energy):
                raise DivergenceError(k + 1)
        except DivergenceError:
            if halvings >= cfg.max_halvings:
                raise
            halvings += 1
            dt *= 0.5
            log.warning("divergence at step %d; halving dt to %g", k + 1, dt)
            stepper = get_stepper(state.grid, model, p, dt)
            continue
        times.append(t)
        energies.append(energy)
        if len(energies) > 1:
            prev = energies[-2]
            if energy > prev + cfg.monotone_rtol * max(abs(prev), 1e-300):
                violations.append((k, prev, energy))
                warnings.warn(f"energy increased at step {k}: {prev!r} -> {energy!r}", MonotonicityWarning, stacklevel=2)
        if vel < cfg.tol_steady:
            converged, reason = True, "gradient_norm"
            break
        w = cfg.steady_window
        if len(energies) > w:
            e0, e1 = energies[-w - 1], energies[-1]
            if abs(e0 - e1) <= cfg.steady_rtol * max(abs(e1), 1e-300):
                converged, reason = True, "energy_plateau"
                break
        if t + dt > t_stop:
            break
        n, phi = n_new, phi_new
        drift = max(drift, float(np.max(np.abs(np.einsum("i...,i...->...", n, n) - 1.0))))
        t += dt
        k += 1
        if cfg.snapshot_every and k % cfg.snapshot_every == 0:
            snapshots.append(SimState(DirectorField(state.grid, n), ScalarField(state.grid, phi), t, k))
        if callback is not None:
            callback(k, t, energy)
    history = tuple(zip(times, energies))
    final = SimState(DirectorField(state.grid, n), ScalarField(state.grid, phi), t, k, state.energy_history + history)
    result = FlowResult(
        state=final,
        snapshots=snapshots,
        history=np.array(history).reshape(-1, 2),
        converged=converged,
        reason=reason,
        dt=dt,
        halvings=halvings,
        monotonicity_violations=violations,
        max_norm_drift=drift,
    )
    result.final_energy = energies[-1] if energies else flow_energy(final, p, model)
    result.final_gradient_norm = gradient_norm(final, p, model)
    return result


def with_dt(cfg, dt):
    return replace(cfg, dt=dt)
