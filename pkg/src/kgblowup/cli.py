"""Command line front end: ``kgblowup {check,run,certify,ground-state,sweep}``."""

from __future__ import annotations

import argparse
import itertools
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from . import certifier
from .config import ConfigError, RunConfig, build, read_raw, with_overrides
from .damped import DAMPED_COLUMNS, damped_blowup_run
from .field import Grid, State, write_field
from .functionals import csv_header, format_float
from .ground_state import GroundStateError, solve_ground_state
from .initial_data import RecipeError, SynthesisError, check_theorem22, realize, synthesize_certified
from .nonlinearity import p_upper_bound
from .solver import BLOWUP_DETECTED, run

EXIT_OK = 0
EXIT_FAIL = 2
EXIT_USAGE = 64
EXIT_RANGE = 65

SWEEP_RESULT_COLUMNS = ("outcome", "t_detect", "t_bound", "verdict")
GROUND_STATE_GRIDS = {1: (60.0, 1024), 2: (40.0, 256), 3: (40.0, 128)}


def prepare_data(cfg: RunConfig):
    """(state0, support_radius) for a config, synthesizing when asked to."""
    if cfg.target_energy is not None:
        syn = synthesize_certified(cfg.model, cfg.grid, cfg.target_energy,
                                   profile=cfg.synth_profile, **cfg.synth_options)
        return syn.state(), syn.support_radius
    u0, u1 = realize(cfg.recipe, cfg.grid)
    return State(cfg.grid, u0, u1), cfg.recipe.support_radius


def _solver_config(cfg, support_radius):
    from dataclasses import replace
    return replace(cfg.solver, support_radius=support_radius)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format_float(v)
    return str(v)


def write_kv(path, items) -> None:
    with open(path, "w") as fh:
        for key, value in items:
            fh.write(f"{key} = {_fmt(value)}\n")


def write_diagnostics(path, records, extra_cols=(), extra_rows=None) -> None:
    with open(path, "w") as fh:
        fh.write(csv_header(extra_cols) + "\n")
        for i, rec in enumerate(records):
            row = rec.csv_row()
            if extra_rows is not None:
                row += "," + ",".join(format_float(v) for v in extra_rows[i])
            fh.write(row + "\n")


def execute(cfg: RunConfig, out_dir: str, certify: bool):
    """Run one configuration, write its files and return a result dict."""
    os.makedirs(out_dir, exist_ok=True)
    state0, support = prepare_data(cfg)
    solver_cfg = _solver_config(cfg, support)
    model = cfg.model
    static = check_theorem22(state0.grid, state0.u, state0.v, model)

    if cfg.equation == "damped":
        dr = damped_blowup_run(state0, model, cfg.a, solver_cfg, cfg.T0)
        result = dr.result
        write_diagnostics(os.path.join(out_dir, "diagnostics.csv"), result.records, DAMPED_COLUMNS,
                          list(zip(dr.G_damped, dr.dG_damped)))
        cert = certifier.assemble(static, result, None)
        if not static.passed:
            verdict = certifier.STATIC_FAIL
        elif dr.violations:
            verdict = certifier.MONITOR_VIOLATION
        elif result.outcome == BLOWUP_DETECTED:
            verdict = certifier.CERTIFIED
        else:
            verdict = certifier.INCONCLUSIVE
        cert.verdict = verdict
        extra = [("mode", dr.label), ("damping_a", cfg.a), ("T0", dr.T0),
                 ("damped_monitor_violations", len(dr.violations))]
    else:
        result = run(state0, model, solver_cfg)
        write_diagnostics(os.path.join(out_dir, "diagnostics.csv"), result.records)
        cert = certifier.certify_run(static, result) if certify else certifier.assemble(static, result)
        extra = []

    summary = {k: (None if isinstance(v, float) and not math.isfinite(v) else v)
               for k, v in result.summary().items()}
    summary["grid"] = {"n": state0.grid.n, "L": state0.grid.L, "N": state0.grid.N}
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")
    if certify:
        write_kv(os.path.join(out_dir, "certificate.txt"), cert.items() + extra)
    return {"result": result, "certificate": cert, "static": static, "summary": summary, "extra": extra}


# commands ---------------------------------------------------------------------------

def _load(args):
    try:
        with open(args.config) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(str(exc)) from exc
    raw, sweep = read_raw(text)
    for flag, key in (("dt", None), ("t_end", "solver.t_end")):
        value = getattr(args, flag, None)
        if value is None:
            continue
        if flag == "dt":
            raw = with_overrides(raw, {"solver.dt_init": value, "solver.dt_max": value})
            dt_min = raw["solver"].get("dt_min")
            if dt_min is None or float(dt_min) > float(value):
                raw["solver"]["dt_min"] = value
        else:
            raw = with_overrides(raw, {key: value})
    return raw, sweep


def cmd_check(args) -> int:
    raw, _ = _load(args)
    cfg = build(raw)
    state0, _ = prepare_data(cfg)
    static = check_theorem22(state0.grid, state0.u, state0.v, cfg.model)
    report = certifier.assemble(static).report().splitlines()[:-1]
    report.append(f"  static conditions: {'all pass' if static.passed else 'FAIL ' + ', '.join(static.failures())}")
    print("\n".join(report))
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        write_kv(os.path.join(args.out, "certificate.txt"), static.items())
    return EXIT_OK if static.passed else EXIT_FAIL


def cmd_run(args) -> int:
    cfg = build(_load(args)[0])
    res = execute(cfg, args.out, certify=False)
    for key, value in sorted(res["summary"].items()):
        print(f"{key} = {_fmt(value) if not isinstance(value, dict) else value}")
    return EXIT_OK


def cmd_certify(args) -> int:
    cfg = build(_load(args)[0])
    res = execute(cfg, args.out, certify=True)
    cert = res["certificate"]
    print(cert.report())
    for key, value in res["extra"]:
        print(f"  {key}: {_fmt(value)}")
    return cert.exit_code


def cmd_ground_state(args) -> int:
    p, n = args.p, args.n
    if n not in (1, 2, 3):
        print("error: n must be 1, 2 or 3", file=sys.stderr)
        return EXIT_USAGE
    if not 1 < p < p_upper_bound(n):
        print(f"warning: p = {p:g} is outside the local existence range 1 < p < {p_upper_bound(n):g} "
              f"for n = {n}; ground state not computed", file=sys.stderr)
        return EXIT_RANGE
    L, N = GROUND_STATE_GRIDS[n]
    grid = Grid(n, args.L or L, args.N or N)
    try:
        kw = {} if n == 1 else {"r_max": args.r_max}
        gs = solve_ground_state(p, grid, **kw)
    except (GroundStateError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    print(f"p = {format_float(p)}")
    print(f"n = {n}")
    print(f"u(0) = {format_float(gs.center_value)}")
    print(f"d = {format_float(gs.d)}")
    print(f"residual = {gs.residual:.3e}")
    print(f"nehari_rel = {gs.nehari_rel:.3e}")
    if args.export:
        write_field(args.export, grid, gs.profile)
    return EXIT_OK


def _sweep_point(args_tuple):
    index, raw, assignment, out_root = args_tuple
    point_dir = os.path.join(out_root, f"point_{index:03d}")
    try:
        cfg = build(with_overrides(raw, assignment))
        res = execute(cfg, point_dir, certify=True)
        cert = res["certificate"]
        t_detect = cert.t_detect if cert.t_detect is not None else math.nan
        return (res["result"].outcome, t_detect, cert.t_bound_derived, cert.verdict)
    except (ConfigError, RecipeError, SynthesisError, GroundStateError, ValueError) as exc:
        os.makedirs(point_dir, exist_ok=True)
        with open(os.path.join(point_dir, "error.txt"), "w") as fh:
            fh.write(f"{type(exc).__name__}: {exc}\n")
        return ("error", math.nan, math.nan, "error")


def cmd_sweep(args) -> int:
    raw, sweep = _load(args)
    keys = list(sweep)
    grids = [sweep[k] for k in keys]
    points = [] if not keys or any(not g for g in grids) else list(itertools.product(*grids))
    os.makedirs(args.out, exist_ok=True)
    jobs = [(i, raw, dict(zip(keys, combo)), args.out) for i, combo in enumerate(points)]
    if args.jobs > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(args.jobs) as pool:
            rows = list(pool.map(_sweep_point, jobs))
    else:
        rows = [_sweep_point(j) for j in jobs]
    with open(os.path.join(args.out, "sweep.csv"), "w") as fh:
        fh.write(",".join(("point",) + tuple(keys) + SWEEP_RESULT_COLUMNS) + "\n")
        for i, (combo, row) in enumerate(zip(points, rows)):
            vals = [str(i)] + list(combo) + [row[0], format_float(row[1]), format_float(row[2]), row[3]]
            fh.write(",".join(vals) + "\n")
    print(f"{len(points)} sweep points written to {os.path.join(args.out, 'sweep.csv')}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kgblowup", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def with_config(p, out_default="out"):
        p.add_argument("--config", required=True, help="run configuration file")
        p.add_argument("--out", default=out_default, help="output directory")
        p.add_argument("--dt", help="fixed time step (sets dt_init = dt_max)")
        p.add_argument("--t-end", dest="t_end", help="final time")
        return p

    with_config(sub.add_parser("check", help="evaluate the four blow-up conditions"), out_default=None)
    with_config(sub.add_parser("run", help="integrate and write diagnostics"))
    with_config(sub.add_parser("certify", help="integrate, monitor and certify"))
    sw = with_config(sub.add_parser("sweep", help="cartesian parameter sweep"))
    sw.add_argument("--jobs", type=int, default=1)

    gs = sub.add_parser("ground-state", help="ground state and threshold level d")
    gs.add_argument("--p", type=float, required=True)
    gs.add_argument("--n", type=int, required=True)
    gs.add_argument("--L", type=float)
    gs.add_argument("--N", type=int)
    gs.add_argument("--r-max", dest="r_max", type=float, default=30.0)
    gs.add_argument("--export", help="write the profile as a KGF1 field file")
    return parser


COMMANDS = {"check": cmd_check, "run": cmd_run, "certify": cmd_certify,
            "ground-state": cmd_ground_state, "sweep": cmd_sweep}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, RecipeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SynthesisError as exc:
        print(f"synthesis failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
