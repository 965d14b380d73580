import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from chevron.geodesics import c0_quadrature
from chevron.potentials import (
    ParameterError,
    angle_well,
    cl_well,
    degennes_well,
    phi_transform,
    w_cl_2d,
    w_cl_theta,
    w_cl_theta_prime,
    w_degennes,
    w_degennes_raw,
)


def _sphere(n, seed=0):
    v = np.random.default_rng(seed).standard_normal((3, n))
    return v / np.linalg.norm(v, axis=0)


class TestDegennesWell:
    def test_sigma_one(self):
        w = degennes_well(1.0)
        assert w.A == 0.5
        assert w.alpha == pytest.approx(np.pi / 3, abs=1e-15)
        assert w.n_bar_1 == pytest.approx(np.sqrt(3) / 2, abs=1e-15)
        # 2/sqrt(A) (sin a - a A) with a = pi/3
        assert w.c0 == pytest.approx(2 * np.sqrt(2) * (np.sqrt(3) / 2 - np.pi / 6), rel=1e-14)

    def test_sigma_zero_collapses_wells(self):
        w = degennes_well(0.0)
        assert w.alpha == 0.0 and w.c0 == 0.0

    def test_zeros_at_wells(self):
        w = degennes_well(2.0)
        assert w_degennes(w.n_plus, 2.0) == pytest.approx(0.0, abs=1e-15)
        assert w_degennes(w.n_minus, 2.0) == pytest.approx(0.0, abs=1e-15)

    def test_nonnegative_on_sphere(self):
        n = _sphere(20000)
        for s in (0.25, 1.0, 5.0):
            assert np.min(w_degennes(n, s)) >= 0.0

    def test_only_zeros_are_wells(self):
        n = _sphere(20000, seed=1)
        w = degennes_well(1.0)
        vals = w_degennes(n, 1.0)
        d = np.minimum(np.linalg.norm(n - w.n_plus[:, None], axis=0), np.linalg.norm(n - w.n_minus[:, None], axis=0))
        # away from the wells W is bounded below
        assert np.min(vals[d > 0.1]) > 1e-3

    def test_meridian_monotonicity(self):
        rng = np.random.default_rng(2)
        s = 1.0
        for _ in range(10_000):
            x0 = rng.uniform(-1, 1)
            z0 = np.sqrt(1 - x0**2)
            ystar = rng.uniform(-1, 1) * np.sqrt(1 - x0**2)
            zstar = np.sqrt(max(1 - x0**2 - ystar**2, 0.0)) * rng.choice([-1, 1])
            assert w_degennes_raw(x0, 0.0, z0, s) <= w_degennes_raw(x0, ystar, zstar, s) + 1e-12

    def test_errors(self):
        with pytest.raises(ParameterError):
            degennes_well(-1)
        with pytest.raises(ValueError):
            w_degennes(np.array([1.0, 1.0, 0.0]), 1.0)


class TestCLWell:
    def test_section4_values(self):
        spec = cl_well(1.0, 0.76)
        # R solves the depressed cubic 8 D2 R^3 + 2 (1 + sigma) R - sigma = 0
        assert 8 * 0.76 * spec.R**3 + 4 * spec.R - 1 == pytest.approx(0.0, abs=1e-14)
        assert spec.beta == pytest.approx(2 * np.arcsin(np.sqrt(spec.R)), abs=1e-15)
        assert w_cl_theta(spec.beta, spec) == pytest.approx(0.0, abs=1e-14)

    @pytest.mark.parametrize("sigma", [0.25, 0.5, 1, 2, 5])
    @pytest.mark.parametrize("D2", [0.1, 0.76, 1, 10])
    def test_beta_against_bisection(self, sigma, D2):
        spec = cl_well(sigma, D2)
        R = brentq(lambda r: 8 * D2 * r**3 + 2 * (1 + sigma) * r - sigma, 0, 0.5, xtol=1e-15)
        assert spec.R == pytest.approx(R, abs=1e-13)
        th = np.linspace(-np.pi, np.pi, 20001)
        assert np.min(w_cl_theta(th, spec)) >= -1e-12
        assert w_cl_theta(spec.beta, spec) == pytest.approx(0.0, abs=1e-12)

    def test_2d_well_zeros(self):
        spec = cl_well(1.0, 0.76)
        n = np.array([np.sqrt(1 - spec.B**2), 0.0, spec.B])
        assert w_cl_2d(n, 1.0, 0.76) == pytest.approx(0.0, abs=1e-14)
        assert np.min(w_cl_2d(_sphere(20000), 1.0, 0.76)) >= -1e-12

    def test_zero_D2_limit_routes_to_degennes(self):
        spec = angle_well(1.0, 0.0)
        dg = degennes_well(1.0)
        assert spec.beta == dg.alpha
        assert spec.B == dg.A
        assert spec.a0 == pytest.approx(0.5)
        assert w_cl_theta(dg.alpha, spec) == pytest.approx(0.0, abs=1e-14)

    def test_small_D2_consistency(self):
        for s in (0.25, 1.0, 5.0):
            spec = cl_well(s, 1e-6)
            dg = degennes_well(s)
            assert abs(spec.beta - dg.alpha) < 1e-3
            assert abs(spec.B - dg.A) < 1e-4

    def test_rejects_zero_D2(self):
        with pytest.raises(ParameterError):
            cl_well(1.0, 0.0)

    def test_large_parameters_stable(self):
        spec = cl_well(1e3, 1e3)
        assert np.isfinite(spec.R) and 0 <= spec.R < 0.5

    @settings(max_examples=200, deadline=None)
    @given(sigma=st.floats(0.0, 1e3), D2=st.floats(1e-6, 1e3))
    def test_R_range(self, sigma, D2):
        assert 0.0 <= cl_well(sigma, D2).R < 0.5

    @settings(max_examples=50, deadline=None)
    @given(theta=st.floats(-np.pi, np.pi))
    def test_even(self, theta):
        spec = cl_well(1.0, 0.76)
        assert w_cl_theta(theta, spec) == w_cl_theta(-theta, spec)

    def test_derivative(self):
        spec = cl_well(2.0, 0.76)
        th = np.linspace(-3, 3, 41)
        h = 1e-6
        fd = (w_cl_theta(th + h, spec) - w_cl_theta(th - h, spec)) / (2 * h)
        np.testing.assert_allclose(w_cl_theta_prime(th, spec), fd, atol=1e-8)


class TestPhi:
    spec = cl_well(1.0, 0.76)

    def test_starts_at_zero(self):
        assert phi_transform(-self.spec.beta, self.spec) == 0.0

    def test_increasing_past_beta(self):
        b = self.spec.beta
        assert phi_transform(b + 0.1, self.spec) > phi_transform(b, self.spec)

    def test_derivative(self):
        for s in (-0.5, 0.3, 1.5, 2.5):
            h = 1e-5
            fd = (phi_transform(s + h, self.spec) - phi_transform(s - h, self.spec)) / (2 * h)
            exact = 2 * np.sqrt(w_cl_theta(s, self.spec))
            assert fd == pytest.approx(exact, rel=1e-6)

    def test_small_D2_limit_is_twice_c0(self):
        # the angle-well cost 2 int sqrt(W) tends to twice the geodesic length c0
        spec = cl_well(1.0, 1e-10)
        assert phi_transform(spec.beta, spec) == pytest.approx(2 * c0_quadrature(1.0), abs=1e-5)
