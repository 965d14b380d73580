"""Command-line entry point.

Every subcommand writes its outputs below ``<root>/<out>`` where ``root``
is ``$CHEVRON_OUTPUT_ROOT`` (default: the working directory) and ``out``
defaults to the subcommand name.  A flat ``key = value`` config file given
with ``--config`` supplies defaults; flags on the command line win.

Exit codes: 0 success, 1 invalid input, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np
import scipy.fft as sfft

from . import __version__
from .dynamics import (
    CHEN_LUBENSKY,
    DEGENNES,
    DivergenceError,
    FlowConfig,
    initial_condition,
    run_flow,
)
from .energy import (
    MODELS,
    ModelParams,
    energy_cl_1d,
    energy_cl_3d,
    energy_degennes_2d,
    energy_degennes_3d,
    torus_energy,
)
from .gamma import (
    ConstructionError,
    convergence_study,
    default_jumps,
    detect_chevron,
    recovery_profile,
)
from .geodesics import c0_quadrature, closed_form, discrete_shortest_path, gamma_c
from .grid import (
    GridError,
    ScalarField,
    line_slice,
    make_grid,
    read_snapshot,
    write_slice_csv,
    write_snapshot,
)
from .minimize1d import (
    COUPLED,
    ELIMINATED,
    NonConvergenceError,
    WrapError,
    minimize_profile,
    profile_from_theta,
    tanh_profile,
)
from .potentials import ParameterError, angle_well, degennes_well, w_degennes_raw

OUTPUT_ROOT_ENV = "CHEVRON_OUTPUT_ROOT"
EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2

log = logging.getLogger("chevron")


class UsageError(Exception):
    """Bad flag, bad config file or bad flag value."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def _float_list(text):
    try:
        return [float(s) for s in str(text).split(",") if s.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _int_list(text):
    try:
        return [int(s) for s in str(text).split(",") if s.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    text = buf.getvalue()
    Path(path).write_text(text)
    return text


def _write_json(path, obj):
    Path(path).write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


# -- argument parsing --------------------------------------------------------------------


_HELP = argparse.ArgumentDefaultsHelpFormatter


def _common(sp):
    sp.add_argument("--config", help="flat key = value file; flags given on the command line win")
    sp.add_argument("--out", help="output directory, relative to $%s if set" % OUTPUT_ROOT_ENV)
    sp.add_argument("--threads", type=int, default=1, help="FFT worker threads")
    sp.add_argument("--seed", type=int, default=0, help="seed of the initial perturbation")


def _flow_flags(sp, n_x, n_z, n_y=0, d1=0.0, d2=0.0):
    sp.add_argument("--tau", type=float, required=True, help="reduced field; the well uses sigma = tau * epsilon")
    sp.add_argument("--epsilon", type=float, default=0.2, help="interface width parameter")
    sp.add_argument("--l", type=float, default=4.0, help="half-period in x")
    sp.add_argument("--nx", type=int, default=n_x)
    if n_y:
        sp.add_argument("--ny", type=int, default=n_y)
    sp.add_argument("--nz", type=int, default=n_z)
    sp.add_argument("--d1", type=float, default=d1)
    sp.add_argument("--d2", type=float, default=d2)
    sp.add_argument("--amplitude", type=float, default=0.1, help="size of the random initial perturbation")
    sp.add_argument("--dt", type=float, default=FlowConfig.dt)
    sp.add_argument("--t-end", type=float, default=100.0, help="stop time if no steady state is reached")
    sp.add_argument("--tol-steady", type=float, default=FlowConfig.tol_steady, help="stop when the gradient norm drops below this")
    sp.add_argument("--steady-window", type=int, default=FlowConfig.steady_window, help="steps over which the energy plateau is tested")
    sp.add_argument("--steady-rtol", type=float, default=FlowConfig.steady_rtol, help="relative energy change that counts as a plateau")
    sp.add_argument("--max-halvings", type=int, default=FlowConfig.max_halvings, help="time-step halvings allowed on divergence")
    sp.add_argument("--snapshot-every", type=int, default=0, help="write a snapshot every this many steps (0: final only)")


def build_parser():
    p = _Parser(prog="chevron", description="Smectic-A chevron models: wells, geodesics, flows and limits.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", metavar="subcommand", parser_class=_Parser)
    sub.required = True

    sp = sub.add_parser("well", formatter_class=_HELP, help="well constants over a parameter sweep")
    _common(sp)
    sp.add_argument("--sigma", type=_float_list, default=[1.0])
    sp.add_argument("--d2", type=_float_list, default=[0.76])

    sp = sub.add_parser("geodesic", formatter_class=_HELP, help="transition cost c0 and discrete shortest paths")
    _common(sp)
    sp.add_argument("--sigma", type=float, default=1.0)
    sp.add_argument("--levels", type=_int_list, default=[3, 4, 5], help="icosphere refinement levels")
    sp.add_argument("--samples", type=int, default=65)

    sp = sub.add_parser("energy", formatter_class=_HELP, help="energy breakdown of a snapshot file")
    _common(sp)
    sp.add_argument("--snapshot", required=True)
    sp.add_argument("--model", choices=MODELS + ("cl2d",), required=True)
    sp.add_argument("--epsilon", type=float, required=True)
    sp.add_argument("--sigma", type=float)
    sp.add_argument("--tau", type=float)
    sp.add_argument("--d1", type=float, default=0.0)
    sp.add_argument("--d2", type=float, default=0.0)

    sp = sub.add_parser("flow2d", formatter_class=_HELP, help="de Gennes gradient flow on the x-z cross-section")
    _common(sp)
    _flow_flags(sp, 128, 65)

    sp = sub.add_parser("flow3d", formatter_class=_HELP, help="de Gennes gradient flow on the full slab")
    _common(sp)
    _flow_flags(sp, 64, 33, n_y=64)

    sp = sub.add_parser("flowcl", formatter_class=_HELP, help="Chen-Lubensky gradient flow on the x-z cross-section")
    _common(sp)
    _flow_flags(sp, 128, 65, d1=0.1, d2=0.76)

    sp = sub.add_parser("minimize1d", formatter_class=_HELP, help="truncated-Newton minimization of the 1D profile energy")
    _common(sp)
    sp.add_argument("--epsilon", type=float, default=0.2)
    sp.add_argument("--sigma", type=float, default=1.0)
    sp.add_argument("--d1", type=float, default=0.0)
    sp.add_argument("--d2", type=float, default=0.0)
    sp.add_argument("--l", type=float, default=4.0)
    sp.add_argument("--nx", type=int, default=512)
    sp.add_argument("--jumps", type=int, default=2, help="number of transitions per period")
    sp.add_argument("--init", choices=("tanh", "recovery", "flat"), default="tanh")
    sp.add_argument("--form", choices=(COUPLED, ELIMINATED), default=COUPLED)
    sp.add_argument("--tol", type=float, default=1e-8, help="gradient-norm tolerance")
    sp.add_argument("--max-iter", type=int, default=10_000)

    sp = sub.add_parser("gamma-study", formatter_class=_HELP, help="energies of recovery profiles against the sharp-interface limit")
    _common(sp)
    sp.add_argument("--model", choices=("dg", "cl"), default="dg")
    sp.add_argument("--eps", type=_float_list, default=[0.4, 0.2, 0.1, 0.05], help="decreasing comma-separated epsilon list")
    sp.add_argument("--jumps", type=int, default=2, help="number of transitions per period")
    sp.add_argument("--sigma", type=float, default=1.0)
    sp.add_argument("--d1", type=float, default=0.0)
    sp.add_argument("--d2", type=float, default=0.76)
    sp.add_argument("--l", type=float, default=4.0)
    sp.add_argument("--nx", type=int, default=4096)
    sp.add_argument("--relax", action=argparse.BooleanOptionalAction, default=False, help="minimize the profiles before measuring (cl only)")
    return p


def _subparser(parser, name):
    for action in parser._subparsers._group_actions:
        if name in action.choices:
            return action.choices[name]
    return None


def _config_argv(parser, command, path):
    """Translate a flat ``key = value`` file into flags for ``command``."""
    cp = configparser.ConfigParser(interpolation=None)
    try:
        text = Path(path).read_text()
        cp.read_string("[run]\n" + text)
    except (OSError, configparser.Error) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    sp = _subparser(parser, command)
    known = {}
    for action in sp._actions:
        for opt in action.option_strings:
            if opt.startswith("--"):
                known[opt[2:]] = action
    argv = []
    for key, value in cp["run"].items():
        flag = key.strip().replace("_", "-")
        value = value.strip().strip('"').strip("'")
        if flag in ("config", "help") or flag not in known:
            raise UsageError(f"unknown config key {key!r}")
        if isinstance(known[flag], argparse.BooleanOptionalAction):
            on = value.lower() in ("1", "true", "yes", "on")
            argv.append(f"--{flag}" if on else f"--no-{flag}")
        else:
            argv += [f"--{flag}", value]
    return argv


def parse_args(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        extra = _config_argv(parser, args.command, args.config)
        # config values first so that explicit flags override them
        args = parser.parse_args([args.command] + extra + list(argv[argv.index(args.command) + 1 :]))
    return args


def _outdir(args):
    root = Path(os.environ.get(OUTPUT_ROOT_ENV, "."))
    out = root / (args.out or args.command)
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- subcommands -------------------------------------------------------------------------


def cmd_well(args, out):
    header = ["sigma", "D2", "A", "alpha", "c0", "R", "beta", "a0", "B", "b0"]
    rows = []
    for s in args.sigma:
        dg = degennes_well(s)
        for d2 in args.d2:
            cl = angle_well(s, d2)
            rows.append([s, d2, dg.A, dg.alpha, dg.c0, cl.R, cl.beta, cl.a0, cl.B, cl.b0])
    sys.stdout.write(_write_csv(out / "well.csv", header, rows))
    return EXIT_OK


def cmd_geodesic(args, out):
    well = degennes_well(args.sigma)
    t = np.linspace(0.0, 1.0, args.samples)
    path = gamma_c(t, well.alpha)
    w = w_degennes_raw(path[0], path[1], path[2], well.sigma)
    _write_csv(out / "path.csv", ["t", "x", "y", "z", "W"], zip(t, path[0], path[1], path[2], np.maximum(w, 0.0)))
    c_exact = closed_form(args.sigma).cost
    rows = [["closed_form", "", "", c_exact, 1.0], ["quadrature", "", "", c0_quadrature(args.sigma), 1.0]]
    rows[1][4] = rows[1][3] / c_exact if c_exact else 1.0
    for level in args.levels:
        res = discrete_shortest_path(args.sigma, level)
        _write_csv(out / f"path_level{level}.csv", ["x", "y", "z"], res.path)
        rows.append(["discrete", level, res.edge_length, res.cost, res.cost / c_exact if c_exact else 1.0])
    sys.stdout.write(_write_csv(out / "convergence.csv", ["method", "level", "edge_length", "cost", "ratio"], rows))
    return EXIT_OK


def _params(args, sigma=None, tau=None):
    return ModelParams(args.epsilon, sigma=sigma, tau=tau, D1=args.d1, D2=args.d2)


def cmd_energy(args, out):
    p = _params(args, sigma=args.sigma, tau=args.tau)
    grid, fields, _ = read_snapshot(args.snapshot)

    def need(*names):
        missing = [k for k in names if k not in fields]
        if missing:
            raise UsageError(f"snapshot lacks field(s) {missing} needed by model {args.model}")
        return [fields[k] for k in names]

    if args.model == "cl1d":
        theta, g = need("theta", "g")
        br = energy_cl_1d(theta, g, p)
    elif args.model in ("dg2d", "cl2d"):
        n, g = need("n", "g")
        br = energy_degennes_2d(n, g, p) if args.model == "dg2d" else torus_energy(n, g, grid, p, "cl2d")
    else:
        n, phi = need("n", "phi")
        br = energy_degennes_3d(n, phi, p) if args.model == "dg3d" else energy_cl_3d(n, phi, p)
    report = {"model": args.model, "snapshot": str(args.snapshot), "params": p.as_dict(), **br.as_dict()}
    _write_json(out / "energy.json", report)
    sys.stdout.write(json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def _flow(args, out, model, grid):
    p = _params(args, tau=args.tau)
    if model == DEGENNES and (args.d1 or args.d2):
        raise UsageError("the de Gennes flows take no --d1/--d2")
    cfg = FlowConfig(
        dt=args.dt,
        t_end=args.t_end,
        tol_steady=args.tol_steady,
        snapshot_every=args.snapshot_every,
        seed=args.seed,
        max_halvings=args.max_halvings,
        steady_window=args.steady_window,
        steady_rtol=args.steady_rtol,
    )
    init = initial_condition(grid, p, args.amplitude, args.seed)
    result = run_flow(init, p, cfg, model)
    final = result.state
    _write_csv(out / "energy.csv", ["time", "energy"], result.history)
    write_snapshot(out / "final.snap", final.fields(), final.time)
    for k, snap in enumerate(result.snapshots):
        write_snapshot(out / f"snap_{k:05d}.snap", snap.fields(), snap.time)
    mid = {a: 0.0 for a in grid.axes}
    n_mid = line_slice(final.n.n, grid, "x", mid)
    write_slice_csv(out / "midline.csv", {"x": grid.coords("x"), "n1": n_mid[0], "n2": n_mid[1], "n3": n_mid[2]})
    extra = {
        "version": __version__,
        "seed": args.seed,
        "amplitude": args.amplitude,
        "threads": args.threads,
        "energy_history_csv": "energy.csv",
        "final_snapshot": "final.snap",
        "midline_csv": "midline.csv",
        "snapshots": [f"snap_{k:05d}.snap" for k in range(len(result.snapshots))],
        "midline_max_abs_n1": float(np.max(np.abs(n_mid[0]))),
        "midline_max_abs_n2": float(np.max(np.abs(n_mid[1]))),
    }
    if model == DEGENNES:
        well = degennes_well(p.sigma_value)
        line = make_grid(grid.l, grid.n_x)
        extra["chevron"] = detect_chevron(ScalarField(line, n_mid[0]), well).as_dict()
    _write_json(out / "manifest.json", result.manifest(p, cfg, model, extra))
    print(
        f"{model}: {result.reason} after {final.step} steps, t={_fmt(final.time)}, "
        f"energy={_fmt(result.final_energy)}, dt={_fmt(result.dt)}"
    )
    return EXIT_OK


def cmd_flow2d(args, out):
    return _flow(args, out, DEGENNES, make_grid(args.l, args.nx, 0, args.nz))


def cmd_flow3d(args, out):
    return _flow(args, out, DEGENNES, make_grid(args.l, args.nx, args.ny, args.nz))


def cmd_flowcl(args, out):
    return _flow(args, out, CHEN_LUBENSKY, make_grid(args.l, args.nx, 0, args.nz))


def _minimize_init(args, grid, p):
    jumps = default_jumps(args.l, args.jumps) if args.jumps else []
    spec = angle_well(p.sigma_value, p.D2)
    if args.init == "flat" or not jumps:
        return ScalarField(grid, np.zeros(grid.n_x))
    if args.init == "recovery":
        theta, _ = recovery_profile(args.epsilon, jumps, spec, grid)
        return theta
    return tanh_profile(grid, spec.beta, jumps, args.epsilon)


def cmd_minimize1d(args, out):
    p = ModelParams(args.epsilon, sigma=args.sigma, D1=args.d1, D2=args.d2)
    grid = make_grid(args.l, args.nx)
    init = profile_from_theta(_minimize_init(args, grid, p))
    code = EXIT_OK
    try:
        state, report = minimize_profile(init, p, tol=args.tol, form=args.form, max_iter=args.max_iter)
    except NonConvergenceError as exc:
        log.error("%s", exc)
        state, report, code = exc.state, exc.report, EXIT_NUMERICAL
    write_slice_csv(out / "profile.csv", {"x": grid.coords("x"), "theta": state.theta.values, "g": state.g.values})
    rep = report.as_dict()
    rep.update({"params": p.as_dict(), "grid": grid.describe(), "init": args.init, "jumps": args.jumps, "tol": args.tol})
    _write_json(out / "report.json", rep)
    print(f"minimize1d: converged={report.converged} iterations={report.iterations} energy={_fmt(report.final_energy)}")
    return code


def cmd_gamma_study(args, out):
    p = ModelParams(args.eps[0] if args.eps else 1.0, sigma=args.sigma, D1=args.d1, D2=args.d2 if args.model == "cl" else 0.0)
    jumps = default_jumps(args.l, args.jumps)
    rows = convergence_study(args.eps, args.model, p, l=args.l, jumps=jumps, n_x=args.nx, relax=args.relax, threads=args.threads)
    header = ["epsilon", "energy", "target", "excess", "ratio"]
    text = _write_csv(out / "table.csv", header, [[r[k] for k in header] for r in rows])
    side = {
        "model": args.model,
        "sigma": args.sigma,
        "D1": args.d1,
        "D2": p.D2,
        "l": args.l,
        "n_x": args.nx,
        "jumps": jumps,
        "relax": args.relax,
        "epsilon": args.eps,
        "table_csv": "table.csv",
    }
    _write_json(out / "table.json", side)
    sys.stdout.write(text)
    return EXIT_OK


COMMANDS = {
    "well": cmd_well,
    "geodesic": cmd_geodesic,
    "energy": cmd_energy,
    "flow2d": cmd_flow2d,
    "flow3d": cmd_flow3d,
    "flowcl": cmd_flowcl,
    "minimize1d": cmd_minimize1d,
    "gamma-study": cmd_gamma_study,
}


def run_cli(argv=None):
    """Run one subcommand and return its exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        args = parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID
    except SystemExit as exc:
        # --help and --version
        return EXIT_OK if not exc.code else EXIT_INVALID
    if args.threads < 1:
        print("--threads must be at least 1", file=sys.stderr)
        return EXIT_INVALID
    try:
        out = _outdir(args)
        with sfft.set_workers(args.threads):
            return COMMANDS[args.command](args, out)
    except DivergenceError as exc:
        print(f"numerical divergence: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (UsageError, ParameterError, GridError, ConstructionError, WrapError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
