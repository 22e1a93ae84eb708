"""``nlbvp`` command line: solve, sweep, analytic, verify.

Exit codes: 0 success, 1 a verification check failed, 2 no root (or no unique
closed-form solution), 3 solver failure, 4 config or argument error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone

import numpy as np

from . import analytic
from .config import KEYS, ConfigError, RunConfig, load_config
from .expr import EvaluationError, to_source
from .geometry import Grid, interior_region
from .local_solver import SolverError, recommended_resolution
from .nonlocal_bc import NO_ROOT, FixedPointResult, fixed_point_solve
from .problem import ProblemError, ProblemSpec
from .verify import (
    SCHEMA_VERSION,
    Run,
    VerificationReport,
    check_boundary_limit,
    check_contraction_decay,
    check_interior_limit,
    check_maximum_principle,
    check_mu_monotonicity,
    select_root,
    spec_id,
)

EXIT_OK, EXIT_CHECK_FAILED, EXIT_NO_ROOT, EXIT_SOLVER, EXIT_CONFIG = 0, 1, 2, 3, 4
SUITES = ("interior", "boundary", "monotonicity", "maxprinciple", "contraction")
ANALYTIC_TASKS = ("eta-root", "lambda-star", "closed-form", "example22")
SWEEP_COLUMNS = ("lambda", "status", "n_roots", "mu", "stability", "contraction",
                 "interior_dev", "boundary_dev", "nodes", "message")

_EPILOG = """\
outputs:
  solve    JSON (roots with mu, stability, residual); with --out also one CSV per
           root next to it, <out>_root<k>.csv, columns x[,y],u
  sweep    CSV sorted by lambda, columns:
             lambda        lambda value
             status        Converged | Diverged | NoRootInBracket | SolverFailure
             n_roots       number of fixed points found
             mu            fixed points, ';'-separated
             stability     attracting | repelling | marginal per root
             contraction   measured contraction estimate
             interior_dev  max |u - h| over the verify.delta interior, per root
             boundary_dev  max |u - g - B[h]| over nonlocal boundary nodes, per root
             nodes         grid nodes per axis, 'x'-separated
             message       error text for failed points
  analytic JSON
  verify   JSON report (schema_version, per-check status, measured values)

every JSON document carries schema_version; a 'timestamp' field (JSON) or a
leading '# generated' line (CSV) is added unless --no-timestamp is given.
exit codes: 0 ok, 1 check failed, 2 no root, 3 solver failure, 4 config error.
"""


class CommandError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------- formatting


def _timestamp() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _num(v) -> float | str:
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def _dump(payload: dict, stamp: bool) -> str:
    payload = dict(payload, schema_version=SCHEMA_VERSION)
    if stamp:
        payload["timestamp"] = _timestamp()
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _grid_csv(u, stamp: bool) -> str:
    buf = io.StringIO()
    if stamp:
        buf.write(f"# generated {_timestamp()}\n")
    w = csv.writer(buf, lineterminator="\n")
    names = ["x", "y"][: u.grid.dim]
    w.writerow(names + ["u"])
    for p, val in zip(u.grid.points, u.values):
        w.writerow([repr(float(c)) for c in p] + [repr(float(val))])
    return buf.getvalue()


def describe_problem(spec: ProblemSpec) -> dict:
    nl = spec.nonlinearity
    return {
        "domain": [list(b) for b in spec.domain.bounds],
        "D": spec.diffusion.source,
        "f": to_source(nl.f),
        "f_s": to_source(nl.f_s),
        "h": nl.root.source,
        "theta0": nl.theta0,
        "g": spec.boundary_data.source,
        "nonlocal": spec.nonlocal_bc.describe(),
    }


# ---------------------------------------------------------------- solving


def grid_for(cfg: RunConfig, spec: ProblemSpec) -> Grid:
    nodes = cfg.nodes or recommended_resolution(spec.domain, spec.lam, cfg.nodes_per_layer)
    return Grid(spec.domain, nodes)


def _validated(cfg: RunConfig, spec: ProblemSpec, grid: Grid):
    bracket = cfg.fixed_point.bracket or spec.default_bracket(grid)
    try:
        spec.validate(grid, spec.default_s_range(grid, bracket))
    except ProblemError as exc:
        raise CommandError(EXIT_CONFIG, f"config error (problem.f): {exc}") from None


def solve_at(cfg: RunConfig, lam: float) -> tuple[ProblemSpec, Grid, FixedPointResult]:
    spec = cfg.spec.with_lambda(lam)
    grid = grid_for(cfg, spec)
    _validated(cfg, spec, grid)
    try:
        result = fixed_point_solve(spec, grid, cfg.fixed_point, cfg.newton)
    except (SolverError, ArithmeticError) as exc:
        raise CommandError(EXIT_SOLVER, f"solver failure at lambda={lam:g}: {exc}") from None
    return spec, grid, result


def _deviations(cfg: RunConfig, spec: ProblemSpec, grid: Grid, u) -> tuple[float, float]:
    h = spec.nonlinearity.root.on(grid)
    region = interior_region(grid, cfg.delta)
    interior = float(np.abs(u.values[region.node_set] - h[region.node_set]).max()) if len(region) else math.nan
    mask = (spec.nonlocal_bc.sigma(grid) == 1.0) & grid.boundary_mask
    g = spec.boundary_data.on(grid)
    bh = spec.b_of_h(grid)
    boundary = float(np.abs(u.values[mask] - g[mask] - bh).max()) if mask.any() else math.nan
    return interior, boundary


def cmd_solve(cfg: RunConfig, out: str | None, stamp: bool) -> int:
    if cfg.lam is None:
        raise CommandError(EXIT_CONFIG, "config error (problem.lambda): solve needs a single lambda")
    spec, grid, result = solve_at(cfg, cfg.lam)
    stem = None if out is None else os.path.splitext(out)[0]
    roots = []
    for k, root in enumerate(result.roots):
        entry = {"mu": _num(root.mu), "stability": root.stability, "residual": _num(root.residual),
                 "slope": _num(root.slope)}
        if stem is not None:
            path = f"{stem}_root{k}.csv"
            _emit(_grid_csv(root.u, stamp), path)
            entry["grid_csv"] = os.path.basename(path)
        roots.append(entry)
    payload = {
        "command": "solve",
        "problem": describe_problem(spec),
        "lambda": spec.lam,
        "nodes": list(grid.shape),
        "status": result.status,
        "strategy": result.strategy,
        "picard_status": result.picard_status,
        "bracket": _num(result.bracket),
        "b_of_h": _num(result.b_of_h),
        "contraction_estimate": _num(result.contraction_estimate),
        "evaluations": result.evaluations,
        "roots": roots,
    }
    _emit(_dump(payload, stamp), out)
    return EXIT_OK if result.roots else EXIT_NO_ROOT


def sweep_point(cfg: RunConfig, lam: float) -> dict:
    """One sweep row; failures are recorded in the row instead of raised."""
    row = dict.fromkeys(SWEEP_COLUMNS, "")
    row["lambda"] = repr(float(lam))
    try:
        spec, grid, result = solve_at(cfg, lam)
    except CommandError as exc:
        row["status"] = "SolverFailure" if exc.code == EXIT_SOLVER else "ConfigError"
        row["message"] = str(exc)
        return row
    devs = [_deviations(cfg, spec, grid, r.u) for r in result.roots]
    row.update(
        status=result.status,
        n_roots=str(len(result.roots)),
        mu=";".join(repr(r.mu) for r in result.roots),
        stability=";".join(r.stability for r in result.roots),
        contraction=repr(float(result.contraction_estimate)),
        interior_dev=";".join(repr(d[0]) for d in devs),
        boundary_dev=";".join(repr(d[1]) for d in devs),
        nodes="x".join(str(n) for n in grid.shape),
    )
    return row


def cmd_sweep(cfg: RunConfig, out: str | None, stamp: bool, jobs: int) -> int:
    lams = cfg.lambdas()
    if jobs <= 1 or len(lams) == 1:
        rows = [sweep_point(cfg, lam) for lam in lams]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(sweep_point, [cfg] * len(lams), lams))
    rows.sort(key=lambda r: float(r["lambda"]))
    buf = io.StringIO()
    if stamp:
        buf.write(f"# generated {_timestamp()}\n")
    w = csv.DictWriter(buf, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    _emit(buf.getvalue(), out)
    if any(r["n_roots"] not in ("", "0") for r in rows):
        return EXIT_OK
    if any(r["status"] == "ConfigError" for r in rows):
        return EXIT_CONFIG
    if any(r["status"] == "SolverFailure" for r in rows):
        return EXIT_SOLVER
    return EXIT_NO_ROOT


# ---------------------------------------------------------------- verification


def _runs(cfg: RunConfig, lams) -> list[Run]:
    runs = []
    for lam in lams:
        spec, _, result = solve_at(cfg, lam)
        try:
            root = select_root(result, cfg.selection)
        except ValueError as exc:
            code = EXIT_NO_ROOT if result.status == NO_ROOT or not result.roots else EXIT_CONFIG
            raise CommandError(code, f"lambda={lam:g}: {exc}") from None
        runs.append(Run(spec, root.mu, root.u, cfg.selection))
    return runs


def cmd_verify(cfg: RunConfig, suite: str, out: str | None, stamp: bool) -> int:
    chosen = SUITES if suite == "all" else (suite,)
    report = VerificationReport(spec_id(cfg.spec))
    needs_sweep = {"interior", "boundary", "monotonicity", "contraction"} & set(chosen)
    lams = cfg.lambdas() if needs_sweep else []
    if {"interior", "boundary"} & set(chosen):
        if len(lams) < 3:
            raise CommandError(EXIT_CONFIG, "config error (sweep.from): limit checks need >= 3 lambdas")
        runs = _runs(cfg, lams)
        if "interior" in chosen:
            report.add(check_interior_limit(runs, cfg.delta))
        if "boundary" in chosen:
            report.add(check_boundary_limit(runs, cfg.spec))
    try:
        if "monotonicity" in chosen:
            grid = None if cfg.nodes is None else Grid(cfg.spec.domain, cfg.nodes)
            report.add(check_mu_monotonicity(cfg.spec, grid, cfg.mu_pair, lams, cfg.newton))
        if "maxprinciple" in chosen:
            lam = cfg.lam if cfg.lam is not None else cfg.lambdas()[-1]
            run = _runs(cfg, [lam])[0]
            for side in ("max", "min"):
                report.add(check_maximum_principle(run.u, side, run.spec))
        if "contraction" in chosen:
            report.add(check_contraction_decay(cfg.spec, lams, cfg.probe,
                                               final_bound=cfg.contraction_bound,
                                               nodes_per_layer=cfg.nodes_per_layer))
    except (SolverError, ArithmeticError) as exc:
        raise CommandError(EXIT_SOLVER, f"solver failure: {exc}") from None
    payload = report.to_dict()
    payload["command"] = "verify"
    payload["suite"] = suite
    _emit(_dump(payload, stamp), out)
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


# ---------------------------------------------------------------- analytic


def _multipoint_spec(args, cfg: RunConfig | None) -> analytic.MultipointSpec1D:
    L = R = g_R = None
    beta = xi = None
    if cfg is not None:
        spec = cfg.spec
        if spec.domain.dim != 1 or spec.nonlocal_bc.kind != "multipoint":
            raise CommandError(EXIT_CONFIG, "config error (nonlocal.kind): analytic needs a 1D multipoint problem")
        (L, R), = spec.domain.bounds
        g_L, g_R = spec.boundary_data.at(np.array([[L], [R]]))
        if g_L != 0:
            raise CommandError(EXIT_CONFIG, "config error (problem.g): the closed form assumes g(L) = 0")
        beta = spec.nonlocal_bc.beta
        xi = tuple(p[0] for p in spec.nonlocal_bc.points)
    # without a config the interval defaults to (0, 1)
    L = args.L if args.L is not None else (0.0 if L is None else L)
    R = args.R if args.R is not None else (1.0 if R is None else R)
    g_R = args.gR if args.gR is not None else g_R
    beta = args.beta if args.beta is not None else beta
    xi = args.xi if args.xi is not None else xi
    missing = [n for n, v in (("beta", beta), ("xi", xi)) if v is None]
    if missing:
        raise CommandError(EXIT_CONFIG, f"missing analytic arguments: {', '.join(missing)}")
    try:
        return analytic.MultipointSpec1D(float(L), float(R), float(g_R or 0.0), tuple(beta), tuple(xi))
    except ValueError as exc:
        raise CommandError(EXIT_CONFIG, f"invalid analytic arguments: {exc}") from None


def cmd_analytic(args, cfg: RunConfig | None, out: str | None, stamp: bool) -> int:
    lam = args.lam if args.lam is not None else (cfg.lam if cfg is not None else None)
    task = args.task
    if task == "example22":
        kind = args.kind or (cfg.analytic["kind"] if cfg is not None else "sqrt")
        if lam is None:
            raise CommandError(EXIT_CONFIG, "example22 needs --lam or problem.lambda")
        try:
            sols = analytic.example22_solutions(kind, lam)
        except ValueError as exc:
            raise CommandError(EXIT_CONFIG, str(exc)) from None
        except OverflowError as exc:
            raise CommandError(EXIT_SOLVER, str(exc)) from None
        payload = {"task": task, "kind": kind, "lambda": lam,
                   "solutions": [{"u1": _num(u1), "u1_over_2sqrt_lambda": _num(u1 / (2 * math.sqrt(lam)))}
                                 for _, u1 in sols]}
        _emit(_dump(payload, stamp), out)
        return EXIT_OK
    spec = _multipoint_spec(args, cfg)
    base = {"task": task, "L": spec.L, "R": spec.R, "g_R": spec.g_R, "beta": list(spec.beta),
            "xi": list(spec.xi)}
    try:
        if task == "lambda-star":
            payload = dict(base, lambda_star=analytic.lambda_star(spec))
        elif task == "eta-root":
            s_max = args.s_max or (cfg.analytic["s_max"] if cfg is not None else 50.0)
            s = analytic.find_eta_root(spec, s_max)
            payload = dict(base, s_c=s, lambda_c=None if s is None else s * s,
                           eta_at_root=None if s is None else analytic.eta(s, spec))
        else:
            if lam is None:
                raise CommandError(EXIT_CONFIG, "closed-form needs --lam or problem.lambda")
            n = args.points or (cfg.analytic["points"] if cfg is not None else 101)
            x = np.linspace(spec.L, spec.R, n)
            member = analytic.in_S_eta(lam, spec)
            if member != "member":
                _emit(_dump(dict(base, **{"lambda": lam, "in_S_eta": member}), stamp), out)
                return EXIT_NO_ROOT
            u = analytic.closed_form_multipoint(spec, lam, x)
            k, mu = analytic.multipoint_fixed_point(spec, lam)
            payload = dict(base, **{"lambda": lam, "in_S_eta": member, "slope": k, "mu_star": mu,
                                    "x": [float(v) for v in x], "u": [float(v) for v in u]})
    except OverflowError as exc:
        raise CommandError(EXIT_SOLVER, str(exc)) from None
    except ValueError as exc:
        raise CommandError(EXIT_CONFIG, str(exc)) from None
    _emit(_dump(payload, stamp), out)
    return EXIT_OK


# ---------------------------------------------------------------- entry point


def _numbers(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.strip("() ").split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    keys = "\n".join(f"  {k:<30} {v}" for k, v in sorted(KEYS.items()))
    parser = argparse.ArgumentParser(
        prog="nlbvp",
        description="Semilinear elliptic problems with nonlocal boundary conditions.",
        epilog=_EPILOG + "\nconfig keys:\n" + keys,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", help="output file (default: stdout)")
        p.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="worker processes for sweeps")
        p.add_argument("--no-timestamp", action="store_true", help="omit timestamps for byte-stable output")

    for name in ("solve", "sweep"):
        p = sub.add_parser(name, help=f"{name} a configured problem", epilog=_EPILOG,
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        p.add_argument("config")
        common(p)
    p = sub.add_parser("verify", help="run verification suites", epilog=_EPILOG,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("config")
    p.add_argument("--suite", choices=SUITES + ("all",), default="all")
    common(p)
    p = sub.add_parser("analytic", help="closed-form quantities of the 1D model problems")
    p.add_argument("task", choices=ANALYTIC_TASKS)
    p.add_argument("config", nargs="?")
    p.add_argument("--L", type=float, help="left end of the interval (default 0)")
    p.add_argument("--R", type=float, help="right end of the interval (default 1)")
    p.add_argument("--gR", type=float)
    p.add_argument("--beta", type=_numbers)
    p.add_argument("--xi", type=_numbers)
    p.add_argument("--lam", type=float)
    p.add_argument("--kind", choices=("sqrt", "quadratic"))
    p.add_argument("--s-max", type=float)
    p.add_argument("--points", type=int)
    common(p)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    stamp = not args.no_timestamp
    try:
        cfg = load_config(args.config) if args.config else None
        if args.command == "solve":
            return cmd_solve(cfg, args.out, stamp)
        if args.command == "sweep":
            return cmd_sweep(cfg, args.out, stamp, args.jobs)
        if args.command == "verify":
            return cmd_verify(cfg, args.suite, args.out, stamp)
        return cmd_analytic(args, cfg, args.out, stamp)
    except ConfigError as exc:
        print(f"nlbvp: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CommandError as exc:
        print(f"nlbvp: {exc}", file=sys.stderr)
        return exc.code
    except (SolverError, EvaluationError, ArithmeticError) as exc:
        print(f"nlbvp: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
