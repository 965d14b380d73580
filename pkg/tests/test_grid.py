import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chevron.grid import (
    DIRICHLET,
    PERIODIC,
    DirectorField,
    GridError,
    ScalarField,
    antiderivative,
    diff,
    helmholtz_apply,
    helmholtz_solve,
    integrate,
    laplacian,
    line_slice,
    make_grid,
    read_snapshot,
    spectral_diff,
    write_slice_csv,
    write_snapshot,
)


class TestGrid:
    def test_shapes_and_tags(self):
        g = make_grid(4, 128, 0, 65)
        assert g.shape == (128, 65)
        assert g.axes == ("x", "z")
        assert g.boundary("x") == PERIODIC
        assert g.boundary("z") == DIRICHLET
        assert g.half_width_l == 4.0

    def test_coords(self):
        g = make_grid(4, 8, 0, 5)
        np.testing.assert_allclose(g.coords("x"), -4 + np.arange(8))
        np.testing.assert_allclose(g.coords("z"), [-1, -0.5, 0, 0.5, 1])

    @pytest.mark.parametrize("args", [(0, 8), (4, 6), (4, 2), (4, 8, 12), (4, 8, 0, 2), (-1, 8)])
    def test_invalid(self, args):
        with pytest.raises(GridError):
            make_grid(*args)

    def test_boundary_restatement(self):
        make_grid(1, 8, 0, 5, {"x": "periodic", "z": "dirichlet"})
        with pytest.raises(GridError):
            make_grid(1, 8, 0, 5, {"z": "periodic"})

    def test_integrate_constant_gives_volume(self):
        for g in (make_grid(2, 16), make_grid(2, 16, 8), make_grid(2, 16, 0, 9), make_grid(2, 8, 8, 5)):
            assert integrate(ScalarField(g, np.ones(g.shape))) == pytest.approx(g.volume(), rel=1e-14)


class TestFields:
    def test_director_must_be_unit(self):
        g = make_grid(1, 8)
        with pytest.raises(ValueError):
            DirectorField(g, np.ones((3, 8)))

    def test_from_components_normalizes(self):
        g = make_grid(1, 8)
        d = DirectorField.from_components(g, 1.0, 0.0, 1.0)
        np.testing.assert_allclose(d.n[0], np.sqrt(0.5))

    def test_fields_copy_input(self):
        g = make_grid(1, 8)
        a = np.zeros(8)
        f = ScalarField(g, a)
        a[0] = 1.0
        assert f.values[0] == 0.0
        assert a.flags.writeable

    def test_shape_mismatch(self):
        with pytest.raises(GridError):
            ScalarField(make_grid(1, 8), np.zeros(4))


class TestSpectral:
    def test_derivative_of_sine_exact(self):
        g = make_grid(np.pi, 32)
        x = g.coords("x")
        f = ScalarField(g, np.sin(3 * x))
        np.testing.assert_allclose(diff(f, "x").values, 3 * np.cos(3 * x), atol=1e-12)
        np.testing.assert_allclose(diff(f, "x", 2).values, -9 * np.sin(3 * x), atol=1e-11)

    def test_nyquist_dropped_for_first_derivative(self):
        g = make_grid(1, 8)
        nyq = np.cos(np.pi * np.arange(8))
        np.testing.assert_allclose(spectral_diff(nyq, g, "x"), 0.0, atol=1e-14)

    def test_antiderivative_inverts_derivative(self):
        g = make_grid(2, 64)
        x = g.coords("x")
        f = ScalarField(g, np.cos(np.pi * x / 2) + 0.3 * np.sin(np.pi * x))
        back = diff(antiderivative(f, "x"), "x")
        np.testing.assert_allclose(back.values, f.values, atol=1e-12)

    def test_z_derivative_second_order(self):
        errs = []
        for n in (17, 33):
            g = make_grid(1, 4, 0, n)
            _, z = g.mesh()
            f = ScalarField(g, np.sin(z))
            errs.append(np.max(np.abs(diff(f, "z").values - np.cos(z))))
        assert errs[0] / errs[1] == pytest.approx(4, rel=0.2)

    def test_laplacian_mixed(self):
        g = make_grid(np.pi, 16, 0, 129)
        x, z = g.mesh()
        f = ScalarField(g, np.cos(2 * x) * z**2)
        np.testing.assert_allclose(laplacian(f).values, np.cos(2 * x) * (2 - 4 * z**2), atol=1e-10)


class TestHelmholtz:
    @pytest.mark.parametrize("shape", [(16,), (16, 8), (16, 0, 9), (8, 8, 7)])
    def test_residual(self, shape):
        g = make_grid(1.5, *shape)
        rng = np.random.default_rng(1)
        rhs = ScalarField(g, rng.standard_normal(g.shape))
        u = helmholtz_solve(rhs, 0.3)
        res = helmholtz_apply(u, 0.3).values - rhs.values
        assert np.max(np.abs(res)) < 1e-12

    def test_walls_are_dirichlet_data(self):
        g = make_grid(1, 8, 0, 9)
        rhs = np.zeros(g.shape)
        rhs[:, 0], rhs[:, -1] = -1.0, 1.0
        u = helmholtz_solve(ScalarField(g, rhs), 0.5).values
        np.testing.assert_array_equal(u[:, 0], -1.0)
        np.testing.assert_array_equal(u[:, -1], 1.0)

    def test_zero_coefficient_is_identity(self):
        g = make_grid(1, 8)
        f = ScalarField(g, np.arange(8.0))
        np.testing.assert_array_equal(helmholtz_solve(f, 0).values, f.values)

    def test_negative_coefficient_rejected(self):
        with pytest.raises(ValueError):
            helmholtz_solve(ScalarField(make_grid(1, 8), np.zeros(8)), -1)

    @settings(max_examples=25, deadline=None)
    @given(a=st.floats(1e-3, 10.0), seed=st.integers(0, 1000))
    def test_residual_property(self, a, seed):
        g = make_grid(2, 16, 0, 9)
        rhs = ScalarField(g, np.random.default_rng(seed).standard_normal(g.shape))
        u = helmholtz_solve(rhs, a)
        scale = max(1.0, np.max(np.abs(rhs.values)))
        assert np.max(np.abs(helmholtz_apply(u, a).values - rhs.values)) < 1e-10 * scale


class TestSnapshots:
    def test_round_trip(self, tmp_path):
        g = make_grid(2, 8, 0, 5)
        rng = np.random.default_rng(0)
        n = DirectorField.from_components(g, *rng.standard_normal((3,) + g.shape))
        phi = ScalarField(g, rng.standard_normal(g.shape))
        path = tmp_path / "s.snap"
        write_snapshot(path, {"n": n, "phi": phi}, time=1.5, extra={"tau": 3})
        g2, fields, header = read_snapshot(path)
        assert g2 == g
        assert header["time"] == 1.5 and header["extra"] == {"tau": 3}
        np.testing.assert_array_equal(fields["n"].n, n.n)
        np.testing.assert_array_equal(fields["phi"].values, phi.values)

    def test_x_fastest_layout(self, tmp_path):
        g = make_grid(1, 4, 0, 3)
        v = np.arange(12.0).reshape(4, 3)
        path = tmp_path / "s.snap"
        write_snapshot(path, {"u": ScalarField(g, v)})
        raw = path.read_bytes().split(b"\n", 1)[1]
        np.testing.assert_array_equal(np.frombuffer(raw, "<f8")[:4], v[:, 0])

    def test_rejects_foreign_file(self, tmp_path):
        path = tmp_path / "x.snap"
        path.write_bytes(b'{"format": "other"}\n')
        with pytest.raises(ValueError):
            read_snapshot(path)

    def test_slice_csv_round_trips_exactly(self, tmp_path):
        g = make_grid(4, 16, 0, 5)
        x, z = g.mesh()
        line = line_slice(np.sin(x) + z, g, "x", {"z": 0.0})
        path = tmp_path / "m.csv"
        write_slice_csv(path, {"x": g.coords("x"), "u": line})
        back = np.loadtxt(path, delimiter=",", skiprows=1)
        np.testing.assert_array_equal(back[:, 1], line)
