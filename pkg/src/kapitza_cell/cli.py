"""Command-line orchestration: solve / sweep / limit / verify / greens-check.

Results are persisted as CSV, JSON, and an SVG convergence figure.  Floats
are written with 17 significant digits so identical configurations produce
byte-identical result files.

Exit codes: 0 success, 2 configuration error, 3 solver failure,
4 verification failure.
"""

import argparse
import json
import math
import os
import sys

import numpy as np

from .config import COMMANDS, ConfigError, parse_config
from .effective import effective_matrix, limit_lambda, limit_lambda_r0, sweep_and_extrapolate
from .geometry import PlacedInclusion, ShapeSpec
from .greens import PeriodicGreenConfig, periodic_green
from .oracles import ball_limit_lambda, disk_limit_lambda_general
from .plots import render_convergence_plot
from .transmission import (
    PhaseParameters,
    SolverError,
    evaluate_solution,
    solve_cell_directions,
    solve_exterior_neumann,
)

THREADS_ENV = "KAPITZA_CELL_THREADS"


def _fnum(x):
    """Fixed 17-significant-digit rendering, valid as a JSON token."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        return "null"
    return format(x, ".17g")


def _json_text(obj, indent=0):
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = ",\n".join(f'{pad}  {json.dumps(str(k))}: {_json_text(v, indent + 1)}'
                           for k, v in obj.items())
        return "{\n" + items + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = [_json_text(v, indent + 1) for v in list(obj)]
        return "[" + ", ".join(seq) + "]"
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    return _fnum(obj)


def _write(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _write_json(path, obj):
    _write(path, _json_text(obj) + "\n")


def _threads(n_jobs):
    cap = os.environ.get(THREADS_ENV)
    limit = os.cpu_count() or 1
    if cap is not None:
        try:
            limit = max(1, int(cap))
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {cap!r}")
    return max(1, min(limit, n_jobs))


def run(config):
    """Execute the configured command, writing artifacts to the output
    directory; returns the process exit status."""
    try:
        if config.command not in COMMANDS:
            raise ConfigError(f"unknown command {config.command!r}")
        os.makedirs(config.out_dir, exist_ok=True)
        if config.command == "solve":
            return _cmd_solve(config)
        if config.command == "sweep":
            return _cmd_sweep(config)
        if config.command == "limit":
            return _cmd_limit(config)
        if config.command == "verify":
            return _cmd_verify(config)
        return _cmd_greens_check(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3


def _cmd_solve(config):
    if config.eps is None:
        raise ConfigError("solve requires cell.eps")
    inclusion = PlacedInclusion(config.shape, config.center, config.eps)
    sols = solve_cell_directions(inclusion, config.phases, config.n_nodes, config.green)
    result = effective_matrix(sols)
    _write_json(os.path.join(config.out_dir, "effective.json"), {
        "eps": result.eps,
        "n_nodes": result.n_nodes,
        "rho": config.phases.rho(result.eps),
        "r_star": config.phases.r_star,
        "lam_eff": result.lam_eff,
        "lambda_hat": result.lambda_hat,
        "bc_residual": result.bc_residual,
    })
    print(f"lam_eff_11 = {result.lam_eff[0, 0]:.12g} at eps = {result.eps:g}")
    return 0


_CSV_COLUMNS = ("eps", "N", "lam_eff_11", "lam_eff_12", "lam_eff_21", "lam_eff_22",
                "Lambda_hat_11", "Lambda_hat_12", "Lambda_hat_21", "Lambda_hat_22",
                "bc_residual")


def _cmd_sweep(config):
    if len(config.eps_values) < 3:
        raise ConfigError("sweep requires >= 3 epsilons")
    sweep = sweep_and_extrapolate(config.shape, config.center, config.phases,
                                  config.eps_values, config.n_nodes, config.green,
                                  threads=_threads(len(config.eps_values)))
    rows = [",".join(_CSV_COLUMNS)]
    for res in sweep.results:
        cells = [_fnum(res.eps), str(res.n_nodes)]
        cells += [_fnum(v) for v in res.lam_eff.ravel()]
        cells += [_fnum(v) for v in res.lambda_hat.ravel()]
        cells.append(_fnum(res.bc_residual))
        rows.append(",".join(cells))
    _write(os.path.join(config.out_dir, "results.csv"), "\n".join(rows) + "\n")
    _write_json(os.path.join(config.out_dir, "summary.json"), {
        "eps": list(config.eps_values),
        "n_nodes": sweep.n_nodes,
        "r_star": sweep.r_star,
        "lambda_hat_extrapolated": sweep.lambda_extrapolated,
        "lambda_reference": sweep.lambda_reference,
        "relative_deviation": sweep.relative_deviation,
        "empirical_order": sweep.observed_orders,
    })
    render_convergence_plot(os.path.join(config.out_dir, "plot.svg"),
                            [r.eps for r in sweep.results],
                            [r.lam_eff[0, 0] for r in sweep.results],
                            config.phases.lambda_minus)
    print(f"extrapolated Lambda_hat_11 = {sweep.lambda_extrapolated[0, 0]:.12g} "
          f"(reference {sweep.lambda_reference[0, 0]:.12g}, "
          f"relative deviation {sweep.relative_deviation:.3e})")
    return 0


def _cmd_limit(config):
    lam = limit_lambda(config.shape, config.phases, config.phases.r_star, config.n_nodes)
    _write_json(os.path.join(config.out_dir, "limit.json"), {
        "r_star": config.phases.r_star,
        "n_nodes": config.n_nodes,
        "limit_coefficient": lam,
    })
    print(f"Lambda[0, r*={config.phases.r_star:g}] diagonal = {lam[0, 0]:.12g}, {lam[1, 1]:.12g}")
    return 0


def _report(checks, path, kind):
    lines = []
    for name, ok, detail in checks:
        status = "PASS" if ok else "FAIL"
        lines.append(f"{status} {name}: {detail}")
        print(lines[-1])
    _write_json(path, {
        "kind": kind,
        "checks": [{"name": n, "pass": bool(ok), "detail": d} for n, ok, d in checks],
    })
    return 0 if all(ok for _, ok, _ in checks) else 4


def _cmd_verify(config):
    n = config.n_nodes
    checks = []

    disk = ShapeSpec.disk()
    unit = PhaseParameters.constant(1.0, 1.0, 1.0)
    lam0 = limit_lambda(disk, unit, 0.0, n)
    target = ball_limit_lambda(2, 1.0)
    rel = abs(lam0[0, 0] - target) / abs(target)
    off = max(abs(lam0[0, 1]), abs(lam0[1, 0]))
    checks.append(("disk r*=0 limit coefficient -2*pi",
                   rel < 1e-8 and off < 1e-10,
                   f"diagonal {lam0[0, 0]:.12g}, relative error {rel:.2e}, off-diagonal {off:.2e}"))

    sol = solve_exterior_neumann(disk, 0, 128)
    value, _ = evaluate_solution(sol, np.array([2.0, 0.0]), side="matrix")
    checks.append(("exterior Neumann field at (2,0)",
                   abs(value - 0.5) < 1e-10,
                   f"value {value:.12g}, error {abs(value - 0.5):.2e}"))

    lam1 = limit_lambda(disk, PhaseParameters.linear(1.0, 1.0, 1.0), 1.0, n)
    oracle = disk_limit_lambda_general(1.0, 1.0, 1.0).lambda_scalar
    rel1 = abs(lam1[0, 0] - oracle) / abs(oracle)
    checks.append(("disk r*=1 limit coefficient -2*pi/3",
                   rel1 < 1e-8,
                   f"diagonal {lam1[0, 0]:.12g}, relative error {rel1:.2e}"))

    lam_r0 = limit_lambda_r0(disk, unit, n)
    gap = np.abs(lam0 - lam_r0).max()
    checks.append(("cross-formula identity at r*=0",
                   gap < 1e-9, f"max entry difference {gap:.2e}"))

    return _report(checks, os.path.join(config.out_dir, "verify.json"), "verify")


def _cmd_greens_check(config):
    checks = []
    pts = np.array([[0.3, 0.4], [0.15, -0.35], [0.47, 0.06]])
    base = config.green
    per = 0.0
    vals, _ = periodic_green(pts, base)
    for shift in ((1.0, 0.0), (0.0, 1.0), (1.0, 1.0)):
        shifted, _ = periodic_green(pts + np.asarray(shift), base)
        per = max(per, float(np.abs(shifted - vals).max()))
    checks.append(("lattice periodicity", per < 1e-12, f"max deviation {per:.2e}"))

    overrides = {k: v for k, v in config.green_overrides.items() if k != "eta"}
    try:
        cfg2 = PeriodicGreenConfig(eta=2.0, **overrides)
        cfg3 = PeriodicGreenConfig(eta=3.0, **overrides)
        v2, _ = periodic_green(pts, cfg2)
        v3, _ = periodic_green(pts, cfg3)
        inv = float(np.abs(v2 - v3).max())
        checks.append(("ewald parameter invariance (eta 2 vs 3)",
                       inv < 1e-10, f"max deviation {inv:.2e}"))
    except ValueError as exc:
        checks.append(("ewald parameter invariance (eta 2 vs 3)", False, str(exc)))

    x0 = np.array([0.3, 0.4])
    _, grad = periodic_green(x0, base)
    errs = []
    steps = (4e-3, 2e-3)
    for h in steps:
        fd = np.empty(2)
        for c, e in enumerate(np.eye(2)):
            vp, _ = periodic_green(x0 + h * e, base)
            vm, _ = periodic_green(x0 - h * e, base)
            fd[c] = (vp - vm) / (2 * h)
        errs.append(float(np.abs(fd - grad).max()))
    order = math.log(errs[0] / errs[1]) / math.log(steps[0] / steps[1])
    checks.append(("gradient vs central differences",
                   order >= 1.9, f"observed order {order:.3f}"))

    return _report(checks, os.path.join(config.out_dir, "greens_check.json"), "greens-check")


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="kapitza-cell",
        description="Periodic two-phase composite with imperfect thermal contact: "
                    "effective conductivity solves, eps-sweeps, and limit coefficients.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, doc in (
            ("solve", "effective conductivity at one inclusion size"),
            ("sweep", "eps sweep with extrapolation of the scaled coefficient"),
            ("limit", "limit coefficient from the limiting transmission problem"),
            ("verify", "closed-form oracle suite"),
            ("greens-check", "periodic Green's function self-checks")):
        p = sub.add_parser(name, help=doc)
        p.add_argument("--config", required=True, help="path to a section.key = value file")
        p.add_argument("--out", default=None, help="output directory (default from config)")
    args = parser.parse_args(argv)

    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        config = parse_config(text)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    config.command = args.command
    if args.out is not None:
        config.out_dir = args.out
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
