"""Double-well potentials of the de Gennes and Chen-Lubensky models.

De Gennes (director on the sphere)::

    W(n) = sigma n2^2 + (n3 - A)^2 / A,        A = 1 / (1 + sigma)

with zeros n+- = (+-sqrt(1 - A^2), 0, A).

Chen-Lubensky, 1D angle form with x = sin(theta / 2)::

    W(theta) = 8 D2 x^8 + 4 (1 + sigma) x^4 - 4 sigma x^2 + a0

and its 2D sphere analogue in terms of v = 1 - n3::

    W(n) = D2 / 2 v^4 + v^2 + sigma (n3^2 + n2^2) + b0
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

UNIT_TOL = 1e-9


class ParameterError(ValueError):
    """Model parameter outside its admissible range."""


def _check_sigma(sigma):
    if not np.isfinite(sigma) or sigma < 0:
        raise ParameterError(f"sigma must be a finite nonnegative number, got {sigma}")


def _check_unit(n):
    n = np.asarray(n, dtype=float)
    if n.shape[0] != 3:
        raise ValueError(f"director must have 3 components along axis 0, got shape {n.shape}")
    dev = np.max(np.abs(np.sqrt(np.einsum("i...,i...->...", n, n)) - 1.0))
    if dev > UNIT_TOL:
        raise ValueError(f"director is not unit length (max deviation {dev:.3g})")
    return n


@dataclass(frozen=True)
class WellSpec:
    """Constants of the de Gennes well for a given ``sigma``."""

    sigma: float
    A: float
    alpha: float
    n_bar_1: float
    c0: float

    @property
    def n_plus(self):
        return np.array([self.n_bar_1, 0.0, self.A])

    @property
    def n_minus(self):
        return np.array([-self.n_bar_1, 0.0, self.A])


def degennes_well(sigma):
    """Well constants ``A``, ``alpha``, ``n_bar_1`` and the transition cost ``c0``."""
    _check_sigma(sigma)
    sigma = float(sigma)
    A = 1.0 / (1.0 + sigma)
    alpha = float(np.arccos(A))
    n_bar_1 = float(np.sin(alpha))
    c0 = 2.0 / np.sqrt(A) * (n_bar_1 - alpha * A)
    return WellSpec(sigma, A, alpha, n_bar_1, max(float(c0), 0.0))


def w_degennes_raw(n1, n2, n3, sigma):
    """De Gennes well without the unit-length check (arrays broadcast)."""
    A = 1.0 / (1.0 + sigma)
    return sigma * n2**2 + (n3 - A) ** 2 / A


def w_degennes(n, sigma):
    """De Gennes well ``sigma n2^2 + (n3 - A)^2 / A`` at unit vector(s) ``n``.

    ``n`` has shape ``(3,)`` or ``(3, ...)``.
    """
    _check_sigma(sigma)
    n = _check_unit(n)
    out = w_degennes_raw(n[0], n[1], n[2], sigma)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class CLWellSpec:
    """Constants of the Chen-Lubensky wells.

    ``R = sin^2(beta / 2)`` locates the 1D well; ``a0`` normalizes its
    minimum to zero.  ``B`` is the third director component at the zeros
    of the 2D well and ``b0`` its normalization.  ``D2 == 0`` is the de
    Gennes limit, obtained from :func:`angle_well`.
    """

    sigma: float
    D2: float
    R: float
    beta: float
    a0: float
    B: float
    b0: float

    def f(self, x):
        """Unnormalized 1D well as a polynomial in ``x = sin(theta / 2)``."""
        x2 = np.asarray(x, dtype=float) ** 2
        return 8 * self.D2 * x2**4 + 4 * (1 + self.sigma) * x2**2 - 4 * self.sigma * x2


def _cubic_root_R(sigma, D2):
    # real root of u^3 + (sigma+1)/(4 D2) u - sigma/(8 D2) = 0
    s1 = sigma + 1.0
    pref = np.sqrt(s1 / (3.0 * D2))
    arg = 1.5 * (sigma / s1) * np.sqrt(3.0 * D2 / s1)
    return float(pref * np.sinh(np.arcsinh(arg) / 3.0))


def _cubic_root_v(sigma, D2):
    # real root of v^3 + (1+sigma)/D2 v - sigma/D2 = 0, v = 1 - B
    s1 = 1.0 + sigma
    pref = 2.0 * np.sqrt(s1 / (3.0 * D2))
    arg = 1.5 * sigma / s1 * np.sqrt(3.0 * D2 / s1)
    return float(pref * np.sinh(np.arcsinh(arg) / 3.0))


def _b0(sigma, D2, v):
    return -(0.5 * D2 * v**4 + v**2 + sigma * (1.0 - v) ** 2)


def cl_well(sigma, D2):
    """Chen-Lubensky well constants for ``D2 > 0`` from the closed-form cubic roots."""
    _check_sigma(sigma)
    if not np.isfinite(D2) or D2 <= 0:
        raise ParameterError(f"D2 must be positive (use angle_well for D2 = 0), got {D2}")
    sigma, D2 = float(sigma), float(D2)
    R = _cubic_root_R(sigma, D2)
    beta = float(2.0 * np.arcsin(np.sqrt(R)))
    a0 = -float(8 * D2 * R**4 + 4 * (1 + sigma) * R**2 - 4 * sigma * R)
    v = _cubic_root_v(sigma, D2)
    return CLWellSpec(sigma, D2, R, beta, a0, 1.0 - v, _b0(sigma, D2, v))


@lru_cache(maxsize=256)
def angle_well(sigma, D2):
    """Like :func:`cl_well` but accepts ``D2 = 0`` (the de Gennes limit)."""
    if D2 != 0:
        return cl_well(sigma, D2)
    well = degennes_well(sigma)
    sigma = well.sigma
    v = 1.0 - well.A
    R = 0.5 * v
    return CLWellSpec(sigma, 0.0, R, well.alpha, sigma**2 / (1 + sigma), well.A, _b0(sigma, 0.0, v))


def w_cl_theta(theta, spec):
    """1D Chen-Lubensky well ``W(theta)``; even in ``theta``, zero at ``+-beta``."""
    x = np.sin(0.5 * np.abs(np.asarray(theta, dtype=float)))
    out = spec.f(x) + spec.a0
    return float(out) if np.ndim(out) == 0 else out


def w_cl_theta_prime(theta, spec):
    """Derivative ``dW/dtheta``."""
    theta = np.asarray(theta, dtype=float)
    x = np.sin(0.5 * theta)
    dfdx = 64 * spec.D2 * x**7 + 16 * (1 + spec.sigma) * x**3 - 8 * spec.sigma * x
    return dfdx * 0.5 * np.cos(0.5 * theta)


def w_cl_2d_raw(n1, n2, n3, spec):
    v = 1.0 - n3
    return 0.5 * spec.D2 * v**4 + v**2 + spec.sigma * (n3**2 + n2**2) + spec.b0


def w_cl_2d(n, sigma, D2):
    """2D Chen-Lubensky well on the sphere; zeros at ``(+-sqrt(1 - B^2), 0, B)``."""
    n = _check_unit(n)
    spec = angle_well(float(sigma), float(D2))
    out = w_cl_2d_raw(n[0], n[1], n[2], spec)
    return float(out) if np.ndim(out) == 0 else out


def _sqrt_w(t, spec):
    return np.sqrt(max(w_cl_theta(t, spec), 0.0))


def phi_transform(s, spec):
    """``Phi(s) = 2 * int_{-beta}^{s} sqrt(W(t)) dt`` by adaptive quadrature.

    The zeros of ``W`` at ``+-beta`` are passed as breakpoints so the
    square-root kinks sit on interval ends.
    """
    s = float(s)
    a = -spec.beta
    if s == a:
        return 0.0
    lo, hi = (a, s) if s > a else (s, a)
    points = [p for p in (-spec.beta, spec.beta) if lo < p < hi]
    total = 0.0
    edges = [lo, *points, hi]
    for x0, x1 in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(_sqrt_w, x0, x1, args=(spec,), epsabs=1e-13, epsrel=1e-13, limit=200)
        total += val
    return 2.0 * total if s > a else -2.0 * total
