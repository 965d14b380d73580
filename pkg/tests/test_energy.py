import numpy as np
import pytest
from fdcheck import relative_error

from chevron.energy import (
    TERMS,
    ModelParams,
    energy_cl_1d,
    energy_cl_2d,
    energy_cl_3d,
    energy_degennes_2d,
    energy_degennes_3d,
    sharp_interface_energy_cl,
    sharp_interface_energy_dg,
    variational_gradient,
)
from chevron.grid import DirectorField, GridError, ScalarField, make_grid
from chevron.potentials import ParameterError, angle_well, cl_well, degennes_well, phi_transform


def _flat_slab(grid):
    n = np.zeros((3,) + grid.shape)
    n[2] = 1.0
    return DirectorField(grid, n), ScalarField(grid, grid.mesh()[-1])


class TestModelParams:
    def test_sigma_tau_relation(self):
        p = ModelParams(0.2, tau=3.0)
        assert p.sigma_value == pytest.approx(0.6)
        assert ModelParams(0.2, sigma=0.6).tau_value == pytest.approx(3.0)

    @pytest.mark.parametrize(
        "kw", [dict(epsilon=0), dict(epsilon=0.2, sigma=1, tau=1), dict(epsilon=1, D1=-1), dict(epsilon=1, h=(1, 1, 0))]
    )
    def test_invalid(self, kw):
        with pytest.raises(ParameterError):
            ModelParams(**kw)


class TestClosedFormEnergies:
    def test_undeformed_slab_is_zero(self):
        for grid in (make_grid(4, 16, 0, 9), make_grid(4, 8, 8, 5)):
            n, phi = _flat_slab(grid)
            assert energy_degennes_3d(n, phi, ModelParams(0.2, tau=3)).total == 0.0
            assert energy_cl_3d(n, phi, ModelParams(0.2, tau=3, D1=0.1, D2=0.76)).total == 0.0

    def test_magnetic_term_of_tilted_slab(self):
        grid = make_grid(4, 8, 0, 5)
        n = np.zeros((3,) + grid.shape)
        n[0] = 1.0
        b = energy_degennes_3d(DirectorField(grid, n), ScalarField(grid, np.zeros(grid.shape)), ModelParams(0.5, tau=2))
        assert b.terms["magnetic"] == pytest.approx(-2 * grid.volume())
        assert b.terms["compression"] == pytest.approx(grid.volume() / 0.5)
        assert b.terms["bending"] == 0.0

    def test_uniform_torus_state(self):
        grid = make_grid(2, 16, 8)
        w = degennes_well(1.0)
        n = DirectorField(grid, np.broadcast_to(w.n_plus[:, None, None], (3,) + grid.shape))
        b = energy_degennes_2d(n, ScalarField(grid, np.zeros(grid.shape)), ModelParams(0.5, sigma=1.0))
        assert b.terms["well"] == pytest.approx(0.0, abs=1e-13)
        assert b.terms["compression"] == pytest.approx(grid.volume() * w.n_bar_1**2 / 0.5)
        assert not b.admissible

    def test_line_flat_state(self):
        grid = make_grid(4, 32)
        spec = angle_well(1.0, 0.76)
        z = ScalarField(grid, np.zeros(32))
        b = energy_cl_1d(z, z, ModelParams(0.2, sigma=1.0, D2=0.76))
        assert b.total == pytest.approx(8 * spec.a0 / 0.2, rel=1e-13)
        assert set(b.terms) == set(TERMS)

    def test_cl_torus_reduces_to_line_for_x_profiles(self):
        grid2 = make_grid(4, 64, 4)
        grid1 = make_grid(4, 64)
        x = grid1.coords("x")
        th = 0.8 * np.sin(np.pi * x / 4)
        g = 0.3 * np.cos(np.pi * x / 4)
        p = ModelParams(0.3, sigma=1.0, D1=0.1, D2=0.76)
        n = DirectorField(grid2, np.stack([np.sin(th), 0 * th, np.cos(th)])[:, :, None] * np.ones((1, 1, 4)))
        e2 = energy_cl_2d(n, ScalarField(grid2, g[:, None] * np.ones((1, 4))), p).total
        e1 = energy_cl_1d(ScalarField(grid1, th), ScalarField(grid1, g), p).total
        # the 2D well of a unit vector in the x-z plane equals the angle well
        assert e2 == pytest.approx(2 * 4 * e1, rel=1e-12)

    def test_grid_mismatch(self):
        with pytest.raises(GridError):
            energy_cl_1d(ScalarField(make_grid(4, 8), np.zeros(8)), ScalarField(make_grid(4, 16), np.zeros(16)), ModelParams(1))


class TestGradients:
    @pytest.mark.parametrize(
        "model,p",
        [
            ("dg2d", ModelParams(0.3, sigma=1.0)),
            ("dg3d", ModelParams(0.2, tau=3.3)),
            ("cl3d", ModelParams(0.2, tau=3.3, D1=0.1, D2=0.76)),
            ("cl1d", ModelParams(0.3, sigma=1.0)),
            ("cl1d", ModelParams(0.3, sigma=1.0, D1=0.1, D2=0.76)),
        ],
    )
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_matches_finite_differences(self, model, p, seed):
        assert relative_error(model, p, seed) < 1e-6

    def test_gradient_vanishes_at_undeformed_state(self):
        grid = make_grid(4, 16, 0, 9)
        n, phi = _flat_slab(grid)
        G = variational_gradient("cl3d", {"n": n, "phi": phi}, ModelParams(0.2, tau=3, D1=0.1, D2=0.76))
        assert np.max(np.abs(G["n"])) == 0.0 and np.max(np.abs(G["phi"])) < 1e-13

    def test_walls_fixed(self):
        grid = make_grid(4, 16, 0, 9)
        n, _ = _flat_slab(grid)
        phi = ScalarField(grid, np.random.default_rng(0).standard_normal(grid.shape))
        G = variational_gradient("dg3d", {"n": n, "phi": phi}, ModelParams(0.2, tau=3))
        assert np.all(G["phi"][:, 0] == 0) and np.all(G["phi"][:, -1] == 0)

    def test_unknown_model(self):
        with pytest.raises(ValueError):
            variational_gradient("xx", {}, ModelParams(1))


class TestSharpInterface:
    def test_degennes(self):
        w = degennes_well(1.0)
        assert sharp_interface_energy_dg(2, w, 4.0) == pytest.approx(8 * w.c0 * 4.0)
        with pytest.raises(ValueError):
            sharp_interface_energy_dg(3, w, 4.0)

    def test_cl(self):
        spec = cl_well(1.0, 0.76)
        phi = phi_transform(spec.beta, spec)
        assert sharp_interface_energy_cl(2, False, spec) == pytest.approx(2 * phi)
        assert sharp_interface_energy_cl(2, True, spec) == pytest.approx(3 * phi)
