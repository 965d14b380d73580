"""Recovery profiles, chevron detection and sharp-interface convergence tables.

A recovery profile places optimal one-dimensional transitions between the
two wells at prescribed jump locations.  Along each transition the angle
follows the inverse of::

    psi(t) = int_{-b}^{t} eps / sqrt(eps + W(s)) ds,     t in [-b, b]

where ``b`` is the well angle (``alpha`` for de Gennes on the great
circle through the poles, ``beta`` for Chen-Lubensky).  All transitions
are shifted by one common ``delta`` in ``[0, eta]`` (``eta = psi(b)``) so
that ``sin(theta)`` integrates to zero, which makes ``g = -int sin(theta)``
periodic.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .energy import (
    ModelParams,
    energy_cl_1d,
    energy_degennes_2d,
    sharp_interface_energy_cl,
    sharp_interface_energy_dg,
)
from .grid import DirectorField, ScalarField, make_grid, spectral_antiderivative, spectral_diff
from .minimize1d import minimize_profile, profile_from_theta, tanh_profile
from .potentials import CLWellSpec, WellSpec, angle_well, degennes_well, w_cl_theta

PSI_SAMPLES = 10_000
PLATEAU_FRACTION = 0.8
WIDTH_FRACTION = 0.9
# gradient norm for relaxed profiles; the energy error is quadratic in it
RELAX_TOL = 1e-7


class ConstructionError(ValueError):
    """Requested recovery profile does not fit on the domain."""


@dataclass(frozen=True)
class TransitionProfile:
    """Tabulated optimal transition from ``-b`` to ``b`` and its inverse."""

    epsilon: float
    b: float
    eta: float
    inverse: PchipInterpolator = field(repr=False)

    def theta(self, r):
        """Angle at signed distance ``r`` from the start of the transition."""
        r = np.asarray(r, dtype=float)
        out = np.where(r <= 0, -self.b, self.b)
        inside = (r > 0) & (r < self.eta)
        out = out.astype(float)
        out[inside] = self.inverse(r[inside])
        return out


def _angle_potential(well):
    """Well angle ``b`` and ``W(theta)`` on the circle of the profile."""
    if isinstance(well, WellSpec):
        A = well.A
        return well.alpha, lambda t: (np.cos(t) - A) ** 2 / A
    if isinstance(well, CLWellSpec):
        return well.beta, lambda t: w_cl_theta(t, well)
    raise TypeError(f"unsupported well spec {type(well).__name__}")


def transition_profile(epsilon, well, samples=PSI_SAMPLES):
    b, W = _angle_potential(well)
    if b == 0:
        raise ConstructionError("wells coincide (sigma = 0); there is no transition")
    fine = np.linspace(-b, b, 8 * (samples - 1) + 1)
    psi_fine = cumulative_trapezoid(epsilon / np.sqrt(epsilon + W(fine)), fine, initial=0.0)
    t = fine[::8]
    psi = psi_fine[::8]
    return TransitionProfile(float(epsilon), float(b), float(psi[-1]), PchipInterpolator(psi, t))


def _signed_distance(x, jumps, l):
    """Signed periodic distance to the nearest jump, positive on ``(j0, j1), (j2, j3), ...``."""
    period = 2 * l
    d = (x[:, None] - np.asarray(jumps)[None, :] + l) % period - l
    nearest = np.argmin(np.abs(d), axis=1)
    dist = np.abs(d[np.arange(len(x)), nearest])
    # inside (j_k, j_{k+1}) for even k is the n+ region
    k = np.searchsorted(jumps, x, side="right") - 1
    plus = (k % 2 == 0) & (k >= 0) & (k < len(jumps) - 1)
    return np.where(plus, dist, -dist)


def _check_jumps(jumps, epsilon, l, eta):
    jumps = np.asarray(sorted(float(j) for j in jumps))
    if len(jumps) == 0 or len(jumps) % 2:
        raise ConstructionError("need a positive even number of jumps")
    if np.any(jumps < -l) or np.any(jumps >= l):
        raise ConstructionError(f"jump locations must lie in [-l, l) with l = {l}")
    gaps = np.diff(np.concatenate([jumps, [jumps[0] + 2 * l]]))
    if np.min(gaps) < 10 * epsilon:
        raise ConstructionError(f"jumps closer than 10 eps ({np.min(gaps):.3g} < {10 * epsilon:.3g})")
    if eta >= np.min(gaps):
        raise ConstructionError(f"transition width {eta:.3g} does not fit between jumps")
    return jumps


def recovery_angle(epsilon, jump_locations, well, grid):
    """Angle profile ``theta(x)`` on the ``x`` axis and construction data."""
    prof = transition_profile(epsilon, well)
    l = grid.l
    jumps = _check_jumps(jump_locations, epsilon, l, prof.eta)
    x = grid.coords("x")
    rho = _signed_distance(x, jumps, l)

    def imbalance(delta):
        return float(np.sum(np.sin(prof.theta(rho + delta))))

    lo, hi = imbalance(0.0), imbalance(prof.eta)
    if lo > 0 or hi < 0:
        raise ConstructionError("no balancing shift in [0, eta]; jump layout too asymmetric")
    delta = brentq(imbalance, 0.0, prof.eta, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    theta = prof.theta(rho + delta)
    info = {"delta": delta, "eta": prof.eta, "imbalance": imbalance(delta) * grid.spacing("x")}
    return theta, info


def recovery_profile(epsilon, jump_locations, well, grid, return_info=False):
    """Modica-Mortola style profile with transitions at ``jump_locations``.

    With a :class:`WellSpec` the result is a director field
    ``(sin theta, 0, cos theta)`` and displacement ``g`` on ``grid`` (1D or
    a torus, constant in ``y``).  With a :class:`CLWellSpec` it is the
    angle ``theta`` and ``g`` on a 1D grid.  ``g = -int n1`` is periodic.
    """
    theta, info = recovery_angle(epsilon, jump_locations, well, grid)
    ax = grid.index("x")
    if isinstance(well, WellSpec):
        line = spectral_antiderivative(np.sin(theta), make_grid(grid.l, grid.n_x), "x")
        shape = [1] * len(grid.shape)
        shape[ax] = grid.n_x
        th = np.broadcast_to(theta.reshape(shape), grid.shape)
        n = np.stack([np.sin(th), np.zeros_like(th), np.cos(th)])
        g = np.broadcast_to(-line.reshape(shape), grid.shape)
        out = (DirectorField(grid, n), ScalarField(grid, g))
    else:
        if grid.axes != ("x",):
            raise ConstructionError("angle profiles live on a 1D grid")
        g = -spectral_antiderivative(np.sin(theta), grid, "x")
        out = (ScalarField(grid, theta), ScalarField(grid, g))
    if return_info:
        return out + (info,)
    return out


# -- chevron detection -----------------------------------------------------------------


@dataclass
class ChevronReport:
    jump_count: int
    plateau_values: list
    wavelength: float | None
    transition_widths: list
    sharp_energy: float
    measured_energy: float | None = None
    below_threshold: bool = False

    def as_dict(self):
        return asdict(self)


def _cyclic_runs(labels):
    """Start/stop index pairs of runs of equal nonzero label in a cyclic array (stop exclusive, may wrap)."""
    labels = np.asarray(labels)
    n = len(labels)
    if np.all(labels == labels[0]):
        return [(0, n)] if labels[0] else []
    # start reading right after a label change so no run is split at the seam
    start = int(np.flatnonzero(labels != np.roll(labels, 1))[0])
    rolled = np.roll(labels, -start)
    runs = []
    i = 0
    while i < n:
        if rolled[i]:
            j = i
            while j < n and rolled[j] == rolled[i]:
                j += 1
            runs.append(((i + start) % n, (j + start - 1) % n + 1))
            i = j
        else:
            i += 1
    return runs


def _crossing(x, u, i, j, level, n, period):
    # linear interpolation of u = level between cyclic neighbours i, j
    xi, xj = x[i], x[j] + (period if j < i else 0)
    ui, uj = u[i], u[j]
    return xi + (level - ui) * (xj - xi) / (uj - ui)


def _transition_width(x, u, start, sign_from, nbar, period):
    """Width over which ``u`` goes from ``0.9 nbar`` on one side to ``0.9 nbar`` on the other."""
    n = len(u)
    level = WIDTH_FRACTION * nbar
    s = sign_from
    # walk forward from the end of the previous plateau to the first point past -s*level
    i = start
    steps = 0
    while s * u[i % n] >= level and steps < n:
        i += 1
        steps += 1
    left = _crossing(x, u, (i - 1) % n, i % n, s * level, n, period)
    j = i
    while -s * u[j % n] < level and steps < 2 * n:
        j += 1
        steps += 1
    right = _crossing(x, u, (j - 1) % n, j % n, -s * level, n, period)
    return float((right - left) % period)


def detect_chevron(n1_midline, well, measured_energy=None):
    """Plateaus, jump count and wavelength of a periodic ``n1`` slice."""
    grid = n1_midline.grid
    u = np.asarray(n1_midline.values, dtype=float).ravel()
    x = grid.coords("x")
    l = grid.l
    nbar = well.n_bar_1
    thr = PLATEAU_FRACTION * nbar
    runs = _cyclic_runs(np.where(u > thr, 1, np.where(u < -thr, -1, 0)))
    if not runs:
        return ChevronReport(0, [], None, [], 0.0, measured_energy, True)
    n = len(u)
    plateaus = []
    for a, b in runs:
        idx = np.arange(a, b if b > a else b + n) % n
        plateaus.append((a, b, float(np.mean(u[idx])), idx))
    # merge neighbouring runs of equal sign (separated only by dips below threshold)
    signs = [np.sign(p[2]) for p in plateaus]
    changes = [k for k in range(len(plateaus)) if signs[k] != signs[(k + 1) % len(plateaus)]]
    jump_count = len(changes) if len(plateaus) > 1 else 0
    widths = []
    for k in changes if jump_count else []:
        _, b, _, _ = plateaus[k]
        widths.append(_transition_width(x, u, b - 1, signs[k], nbar, 2 * l))
    wavelength = 4 * l / jump_count if jump_count else None
    return ChevronReport(
        jump_count=jump_count,
        plateau_values=[p[2] for p in plateaus],
        wavelength=wavelength,
        transition_widths=widths,
        sharp_energy=sharp_interface_energy_dg(jump_count, well, l),
        measured_energy=measured_energy,
        below_threshold=False,
    )


def transition_width(theta_or_n1, level_value):
    """Distance over which a two-jump slice rises from ``-0.9 v`` to ``+0.9 v`` (first rising jump)."""
    grid = theta_or_n1.grid
    u = np.asarray(theta_or_n1.values, dtype=float).ravel()
    x = grid.coords("x")
    n = len(u)
    start = int(np.argmin(u))
    return _transition_width(x, u, start, -1.0, level_value, 2 * grid.l) if n else 0.0


def slope_width(theta_or_n1, level_value):
    """Width ``2 v / max|u'|`` of the steepest transition of a periodic slice.

    Unlike :func:`transition_width` it is defined for profiles that never
    reach ``0.9 v`` (wide transitions at large ``eps``).
    """
    grid = theta_or_n1.grid
    u = np.asarray(theta_or_n1.values, dtype=float).ravel()
    du = spectral_diff(u, make_grid(grid.l, grid.n_x), "x")
    return float(2 * level_value / np.max(np.abs(du)))


# -- convergence study -------------------------------------------------------------------


def default_jumps(l, count=2):
    """Evenly spaced jumps, two at ``+-l/2`` by default."""
    return list(-l + (np.arange(count) + 0.5) * (2 * l / count))


def _dg_row(eps, p, l, jumps, n_x):
    well = degennes_well(p.sigma_value)
    grid = make_grid(l, n_x, 4)
    n, g = recovery_profile(eps, jumps, well, grid)
    q = ModelParams(eps, sigma=p.sigma_value)
    energy = energy_degennes_2d(n, g, q).total
    target = sharp_interface_energy_dg(len(jumps), well, l)
    return energy, target


def _cl_row(eps, p, l, jumps, n_x, relax):
    spec = angle_well(p.sigma_value, p.D2)
    grid = make_grid(l, n_x)
    q = ModelParams(eps, sigma=p.sigma_value, D1=p.D1, D2=p.D2)
    if relax:
        try:
            theta, _ = recovery_profile(eps, jumps, spec, grid)
        except ConstructionError:
            # eps too large for the construction; any two-jump guess will do before relaxing
            theta = tanh_profile(grid, spec.beta, jumps, eps)
        state, _ = minimize_profile(profile_from_theta(theta), q, tol=RELAX_TOL)
        theta, g = state.theta, state.g
    else:
        theta, g = recovery_profile(eps, jumps, spec, grid)
    energy = energy_cl_1d(theta, g, q).total
    target = sharp_interface_energy_cl(len(jumps), False, spec)
    return energy, target


def convergence_study(epsilon_list, model, p, l=4.0, jumps=None, n_x=4096, relax=None, threads=1):
    """Energy of recovery (or relaxed) profiles against the sharp-interface limit.

    ``model`` is ``"dg"`` (torus, target ``2 c0`` times interface length)
    or ``"cl"`` (line, target ``Phi(beta)`` per jump).  ``relax`` minimizes
    the constructed CL profile first (default: off).  Rows are dicts with
    ``epsilon, energy, target, excess, ratio``.
    """
    eps_list = [float(e) for e in epsilon_list]
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("epsilon list must be strictly decreasing")
    jumps = default_jumps(l) if jumps is None else list(jumps)
    if model == "dg":
        job = lambda e: _dg_row(e, p, l, jumps, n_x)  # noqa: E731
    elif model == "cl":
        job = lambda e: _cl_row(e, p, l, jumps, n_x, bool(relax))  # noqa: E731
    else:
        raise ValueError(f"unknown model {model!r}; expected 'dg' or 'cl'")
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(job, eps_list))
    else:
        results = [job(e) for e in eps_list]
    rows = []
    for eps, (energy, target) in zip(eps_list, results):
        rows.append(
            {
                "epsilon": eps,
                "energy": energy,
                "target": target,
                "excess": energy - target,
                "ratio": energy / target if target else float("nan"),
            }
        )
    return rows
