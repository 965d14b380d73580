"""Truncated-Newton minimization of the 1D profile energy.

The unknowns are the director angle ``theta`` and the zero-mean layer
displacement ``g`` on a periodic line.  Each outer iteration solves the
Newton system approximately by preconditioned CG (at most 50 inner
iterations, stopped early at negative curvature) with Hessian-vector
products from central differences of the exact discrete gradient, then
takes an Armijo backtracking step.

With ``D1 = D2 = 0`` the displacement can be eliminated: the best ``g``
for a given ``theta`` makes ``g' + sin(theta)`` equal to the part of
``sin(theta)`` that no periodic derivative can cancel (its mean and the
Nyquist mode).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
import scipy.fft as sfft

from .energy import line_energy
from .grid import ScalarField, check_same_grid, spectral_antiderivative

COUPLED = "coupled"
ELIMINATED = "eliminated"
STALL_ITERATIONS = 20


class NonConvergenceError(RuntimeError):
    """Minimizer stopped before reaching the gradient tolerance; carries the best state."""

    def __init__(self, message, state, report):
        super().__init__(message)
        self.state = state
        self.report = report


class WrapError(ValueError):
    """Angle left ``[-pi, pi]``."""


@dataclass(frozen=True)
class ProfileState:
    theta: ScalarField
    g: ScalarField

    def __post_init__(self):
        check_same_grid(self.theta, self.g)
        if np.max(np.abs(self.theta.values)) > np.pi:
            raise WrapError("theta must lie in [-pi, pi]")
        scale = max(1.0, float(np.max(np.abs(self.g.values))))
        if abs(np.mean(self.g.values)) > 1e-10 * scale:
            raise ValueError("g must have zero mean")

    @property
    def grid(self):
        return self.theta.grid


@dataclass
class MinimizeReport:
    form: str
    converged: bool = False
    iterations: int = 0
    cg_iterations: int = 0
    negative_curvature_exits: int = 0
    function_evals: int = 0
    gradient_evals: int = 0
    backtracks: int = 0
    initial_energy: float = 0.0
    final_energy: float = 0.0
    gradient_norm: float = 0.0

    def as_dict(self):
        return asdict(self)


def compatible_displacement(theta, grid):
    """Zero-mean ``g`` with ``g' = -sin(theta)`` up to the uncancellable modes."""
    return -spectral_antiderivative(np.sin(theta), grid, "x")


def profile_from_theta(theta):
    """:class:`ProfileState` with the compatible displacement for ``theta``."""
    g = compatible_displacement(theta.values, theta.grid)
    return ProfileState(theta, ScalarField(theta.grid, g - np.mean(g)))


def tanh_profile(grid, amplitude, jumps, width):
    """Smooth periodic angle profile switching sign at each of an even number of ``jumps``."""
    if len(jumps) % 2:
        raise ValueError("need an even number of jumps on a periodic line")
    x = grid.coords("x")
    s = np.ones_like(x)
    for xj in jumps:
        s = s * np.sin(np.pi * (x - xj) / (2 * grid.l))
    # the product has slope ~ pi/(2l) per factor near a zero; scale so the tanh width is `width`
    slope = np.max(np.abs(np.gradient(s, x)))
    return ScalarField(grid, amplitude * np.tanh(s / (slope * width)))


class _Problem:
    def __init__(self, grid, p, form):
        self.grid = grid
        self.p = p
        self.form = form
        self.m = grid.n_x
        self.w = grid.spacing("x")
        self.nfev = 0
        self.ngev = 0
        k = 2 * np.pi * sfft.rfftfreq(self.m, self.w)
        k[-1] = 0.0
        eps = p.epsilon
        # Fourier-diagonal approximation of the Hessian, used as CG preconditioner
        self.prec_theta = self.w * (2 * eps * (1 + p.D1) * k**2 + 2.0 / eps * (1 + p.sigma_value))
        pg = self.w * (2.0 / eps * k**2 + 2 * p.D1 * eps * k**4)
        self.inv_g = np.where(pg > 0, 1.0 / np.where(pg > 0, pg, 1.0), 0.0)

    def split(self, x):
        if self.form == ELIMINATED:
            return x, compatible_displacement(x, self.grid)
        return x[: self.m], x[self.m :]

    def energy(self, x):
        self.nfev += 1
        th, g = self.split(x)
        return float(sum(line_energy(th, g, self.grid, self.p).values()))

    def gradient(self, x):
        self.ngev += 1
        th, g = self.split(x)
        _, gth, gg = line_energy(th, g, self.grid, self.p, grad=True)
        if self.form == ELIMINATED:
            return gth
        return np.concatenate([gth, gg])

    def norm(self, grad):
        # discrete L2 norm of the L2 gradient grad / w
        return float(np.sqrt(np.sum(grad**2) / self.w))

    def precondition(self, r):
        th = sfft.irfft(sfft.rfft(r[: self.m]) / self.prec_theta, n=self.m)
        if self.form == ELIMINATED:
            return th
        g = sfft.irfft(sfft.rfft(r[self.m :]) * self.inv_g, n=self.m)
        return np.concatenate([th, g])

    def hessvec(self, x, v, gx):
        vn = np.linalg.norm(v)
        if vn == 0:
            return np.zeros_like(v)
        h = 1e-6 * (1.0 + np.linalg.norm(x) / np.sqrt(x.size)) / (vn / np.sqrt(v.size))
        return (self.gradient(x + h * v) - self.gradient(x - h * v)) / (2 * h)


def _newton_direction(prob, x, grad, report, max_cg=50):
    r = -grad
    z = prob.precondition(r)
    d = z.copy()
    s = np.zeros_like(x)
    rz = r @ z
    gnorm = np.linalg.norm(grad)
    forcing = min(0.5, np.sqrt(gnorm)) * gnorm
    for j in range(max_cg):
        hd = prob.hessvec(x, d, grad)
        dhd = d @ hd
        report.cg_iterations += 1
        if dhd <= 1e-14 * (d @ d):
            report.negative_curvature_exits += 1
            return s if j > 0 else z
        a = rz / dhd
        s += a * d
        r -= a * hd
        if np.linalg.norm(r) <= forcing:
            break
        z = prob.precondition(r)
        rz_new = r @ z
        d = z + (rz_new / rz) * d
        rz = rz_new
    return s


def minimize_profile(init, p, tol=1e-8, form=COUPLED, max_iter=10_000, c1=1e-4, max_backtracks=60):
    """Minimize the 1D profile energy from ``init``.

    ``form`` is ``"coupled"`` (minimize over ``theta`` and ``g``) or
    ``"eliminated"`` (``theta`` only; requires ``D1 = D2 = 0``).  Returns
    ``(state, report)``; raises :class:`NonConvergenceError` with the best
    state if the gradient norm does not drop below ``tol``, including when
    ``STALL_ITERATIONS`` consecutive steps only lower the energy at the
    rounding level.
    """
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if form not in (COUPLED, ELIMINATED):
        raise ValueError(f"unknown form {form!r}")
    if form == ELIMINATED and (p.D1 or p.D2):
        raise ValueError("the eliminated form needs D1 = D2 = 0")
    grid = init.grid
    prob = _Problem(grid, p, form)
    th0 = np.array(init.theta.values)
    x = th0 if form == ELIMINATED else np.concatenate([th0, init.g.values])
    report = MinimizeReport(form=form)
    f = prob.energy(x)
    grad = prob.gradient(x)
    report.initial_energy = f

    def finish():
        report.final_energy = f
        report.gradient_norm = prob.norm(grad)
        report.function_evals = prob.nfev
        report.gradient_evals = prob.ngev
        th, g = prob.split(x)
        g = g - np.mean(g)
        return ProfileState(ScalarField(grid, th), ScalarField(grid, g))

    stalled = 0
    for it in range(max_iter + 1):
        if prob.norm(grad) < tol:
            report.converged = True
            return finish(), report
        if it == max_iter:
            break
        d = _newton_direction(prob, x, grad, report)
        slope = grad @ d
        if slope >= 0:
            d = -prob.precondition(grad)
            slope = grad @ d
        step = 1.0
        accepted = False
        for _ in range(max_backtracks):
            xt = x + step * d
            if np.max(np.abs(xt[: prob.m])) <= np.pi:
                ft = prob.energy(xt)
                if ft <= f + c1 * step * slope:
                    accepted = True
                    break
            step *= 0.5
            report.backtracks += 1
        if not accepted:
            report.iterations = it
            state = finish()
            raise NonConvergenceError(
                f"line search failed at iteration {it} (gradient norm {report.gradient_norm:.3e})", state, report
            )
        # decreases at the rounding level of f mean tol is below the attainable gradient norm
        stalled = stalled + 1 if f - ft <= 8 * np.finfo(float).eps * abs(f) else 0
        x, f = xt, ft
        grad = prob.gradient(x)
        report.iterations = it + 1
        if stalled >= STALL_ITERATIONS:
            state = finish()
            raise NonConvergenceError(
                f"stalled at rounding level after {it + 1} iterations (gradient norm {report.gradient_norm:.3e})",
                state,
                report,
            )
    state = finish()
    raise NonConvergenceError(f"no convergence in {max_iter} iterations", state, report)
