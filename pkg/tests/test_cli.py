import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from chevron import cli
from chevron.dynamics import DivergenceError
from chevron.energy import ModelParams, energy_degennes_3d
from chevron.grid import read_snapshot

SMALL_FLOW = ["--nx", "32", "--nz", "17", "--dt", "0.02"]


@pytest.fixture
def root(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUTPUT_ROOT_ENV, str(tmp_path))
    return tmp_path


def _rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


class TestArguments:
    def test_unknown_flag(self, root, capsys):
        assert cli.run_cli(["well", "--bogus"]) == 1
        assert "usage" in capsys.readouterr().err

    def test_unknown_subcommand(self, root):
        assert cli.run_cli(["nope"]) == 1

    def test_missing_subcommand(self, root):
        assert cli.run_cli([]) == 1

    def test_bad_value(self, root):
        assert cli.run_cli(["well", "--sigma", "abc"]) == 1

    def test_validation_error(self, root, capsys):
        assert cli.run_cli(["well", "--sigma", "-1"]) == 1
        assert "sigma" in capsys.readouterr().err

    def test_threads_must_be_positive(self, root):
        assert cli.run_cli(["well", "--threads", "0"]) == 1

    def test_help(self, root):
        assert cli.run_cli(["--help"]) == 0

    def test_module_entry_point(self):
        out = subprocess.run([sys.executable, "-m", "chevron", "--version"], capture_output=True, text=True)
        assert out.returncode == 0 and out.stdout.strip() == cli.__version__


class TestWell:
    def test_section4_row(self, root, capsys):
        assert cli.run_cli(["well", "--sigma", "1", "--d2", "0.76"]) == 0
        rows = _rows(root / "well" / "well.csv")
        assert len(rows) == 1
        assert float(rows[0]["A"]) == 0.5
        assert float(rows[0]["beta"]) == pytest.approx(1.003237053926876, abs=1e-14)
        assert capsys.readouterr().out.startswith("sigma,D2,A")

    def test_sweep_and_precision(self, root):
        assert cli.run_cli(["well", "--sigma", "0.5,1,2", "--d2", "0,0.76"]) == 0
        rows = _rows(root / "well" / "well.csv")
        assert len(rows) == 6
        # 17 significant digits round-trip exactly
        assert float(rows[0]["alpha"]) == np.arccos(1 / 1.5)


class TestGeodesic:
    def test_outputs(self, root):
        assert cli.run_cli(["geodesic", "--sigma", "1", "--levels", "3"]) == 0
        path = _rows(root / "geodesic" / "path.csv")
        assert len(path) == 65 and set(path[0]) == {"t", "x", "y", "z", "W"}
        table = _rows(root / "geodesic" / "convergence.csv")
        assert [r["method"] for r in table] == ["closed_form", "quadrature", "discrete"]
        assert 1.0 <= float(table[2]["ratio"]) < 1.002


class TestGammaStudy:
    def test_four_rows(self, root, capsys):
        assert cli.run_cli(["gamma-study", "--model", "dg", "--jumps", "2", "--eps", "0.4,0.2,0.1,0.05"]) == 0
        rows = _rows(root / "gamma-study" / "table.csv")
        assert len(rows) == 4
        side = json.loads((root / "gamma-study" / "table.json").read_text())
        assert side["jumps"] == [-2.0, 2.0] and side["model"] == "dg"


class TestFlows:
    def test_flow2d_decays_at_tau3(self, root):
        args = ["flow2d", "--tau", "3", "--epsilon", "0.2", "--l", "4", "--t-end", "200", "--tol-steady", "1e-7"]
        assert cli.run_cli(args + SMALL_FLOW) == 0
        m = json.loads((root / "flow2d" / "manifest.json").read_text())
        assert m["converged"]
        assert abs(m["final_energy"]) < 1e-8
        for key in ("dt", "t_end", "tol_steady", "steady_window", "steady_rtol", "monotone_rtol", "max_halvings"):
            assert key in m["config"]
        assert m["grid"]["n_z"] == 17 and m["seed"] == 0
        assert (root / "flow2d" / m["energy_history_csv"]).exists()

    def test_reproducible_outputs(self, root):
        base = ["flow2d", "--tau", "6", "--t-end", "0.4", "--snapshot-every", "10"] + SMALL_FLOW
        assert cli.run_cli(base + ["--out", "a"]) == 0
        assert cli.run_cli(base + ["--out", "b"]) == 0
        names = sorted(p.name for p in (root / "a").iterdir())
        assert "snap_00002.snap" in names
        for name in names:
            assert (root / "a" / name).read_bytes() == (root / "b" / name).read_bytes(), name

    def test_energy_subcommand_reads_snapshot(self, root, capsys):
        assert cli.run_cli(["flow2d", "--tau", "6", "--t-end", "0.2"] + SMALL_FLOW) == 0
        snap = root / "flow2d" / "final.snap"
        capsys.readouterr()
        assert cli.run_cli(["energy", "--snapshot", str(snap), "--model", "dg3d", "--epsilon", "0.2", "--tau", "6"]) == 0
        out = json.loads(capsys.readouterr().out)
        grid, fields, _ = read_snapshot(snap)
        ref = energy_degennes_3d(fields["n"], fields["phi"], ModelParams(0.2, tau=6.0))
        assert out["total"] == ref.total

    def test_energy_wrong_fields(self, root):
        assert cli.run_cli(["flow2d", "--tau", "6", "--t-end", "0.02"] + SMALL_FLOW) == 0
        snap = str(root / "flow2d" / "final.snap")
        assert cli.run_cli(["energy", "--snapshot", snap, "--model", "cl1d", "--epsilon", "0.2"]) == 1

    def test_flowcl_runs(self, root):
        assert cli.run_cli(["flowcl", "--tau", "3", "--t-end", "0.1"] + SMALL_FLOW) == 0
        m = json.loads((root / "flowcl" / "manifest.json").read_text())
        assert m["params"]["D1"] == 0.1 and m["params"]["D2"] == 0.76
        assert m["model"] == "cl"

    def test_flow3d_small(self, root):
        assert cli.run_cli(["flow3d", "--tau", "6", "--nx", "8", "--ny", "8", "--nz", "5", "--dt", "0.01", "--t-end", "0.05"]) == 0
        m = json.loads((root / "flow3d" / "manifest.json").read_text())
        assert m["grid"]["n_y"] == 8 and not m["monotonicity_violations"]

    def test_degennes_flow_rejects_cl_terms(self, root):
        assert cli.run_cli(["flow2d", "--tau", "3", "--d1", "0.1"] + SMALL_FLOW) == 1

    def test_divergence_exit_code(self, root, monkeypatch):
        def boom(*args, **kwargs):
            raise DivergenceError(7)

        monkeypatch.setattr(cli, "run_flow", boom)
        assert cli.run_cli(["flow2d", "--tau", "3"] + SMALL_FLOW) == 2


class TestMinimize:
    def test_outputs(self, root):
        assert cli.run_cli(["minimize1d", "--epsilon", "0.2", "--nx", "256"]) == 0
        rows = _rows(root / "minimize1d" / "profile.csv")
        assert len(rows) == 256
        theta = np.array([float(r["theta"]) for r in rows])
        assert np.max(theta) == pytest.approx(np.pi / 3, rel=0.02)
        rep = json.loads((root / "minimize1d" / "report.json").read_text())
        assert rep["converged"] and rep["final_energy"] <= rep["initial_energy"]

    def test_nonconvergence_exit_code(self, root):
        assert cli.run_cli(["minimize1d", "--nx", "256", "--max-iter", "1", "--tol", "1e-14"]) == 2
        assert (root / "minimize1d" / "profile.csv").exists()


class TestConfig:
    def test_flags_override_config(self, root, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# sweep\nsigma = 2\nd2 = 0.76\n")
        assert cli.run_cli(["well", "--config", str(cfg)]) == 0
        assert float(_rows(root / "well" / "well.csv")[0]["sigma"]) == 2.0
        assert cli.run_cli(["well", "--config", str(cfg), "--sigma", "1"]) == 0
        assert float(_rows(root / "well" / "well.csv")[0]["sigma"]) == 1.0

    def test_boolean_and_underscore_keys(self, root, tmp_path):
        cfg = tmp_path / "g.cfg"
        cfg.write_text("model = dg\neps = 0.4\nrelax = false\nn_x = 1024\n")
        # n_x is not a flag of gamma-study (the flag is --nx)
        assert cli.run_cli(["gamma-study", "--config", str(cfg)]) == 1
        cfg.write_text("model = dg\neps = 0.4\nrelax = false\nnx = 1024\n")
        assert cli.run_cli(["gamma-study", "--config", str(cfg)]) == 0

    def test_unknown_key(self, root, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("colour = red\n")
        assert cli.run_cli(["well", "--config", str(cfg)]) == 1

    def test_missing_file(self, root, tmp_path):
        assert cli.run_cli(["well", "--config", str(tmp_path / "none.cfg")]) == 1
