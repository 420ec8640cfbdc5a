"""Command-line frontend: solve built-in problems, check external trajectories,
and list the registry.

Exit codes: 0 converged (or check passed), 1 check failed, 2 iteration limit,
3 inner-solver failure, 64 usage errors, 65 malformed data or dimension
mismatches.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional

import numpy as np

from . import __version__
from .alm import AlmConfig, SolveStatus, solve
from .diagnostics import infeasibility_report, sufficiency_certificate
from .grid import (Trajectory, TrajectoryCsvError, make_uniform_grid,
                   read_trajectory_csv)
from .inner import InnerConfig
from .lagrangian import akkt_residuals, feasibility_factor
from .plots import residuals_svg, trajectory_svg
from .problems import UnknownProblemError, builtin, builtin_names, reference_solution

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_MAX_OUTER = 2
EXIT_INNER_FAILURE = 3
EXIT_USAGE = 64
EXIT_DATA = 65

_STATUS_EXIT = {
    SolveStatus.AKKT_CONVERGED: EXIT_OK,
    SolveStatus.MAX_OUTER_REACHED: EXIT_MAX_OUTER,
    SolveStatus.INNER_FAILURE: EXIT_INNER_FAILURE,
}

OUTPUT_FILES = ("iterations.csv", "trajectory.csv", "summary.json",
                "trajectory.svg", "residuals.svg")


class CliError(Exception):
    def __init__(self, exit_code: int, message: str):
        super().__init__(message)
        self.exit_code = exit_code


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems with exit code 64."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        sys.exit(EXIT_USAGE)


# Flag name -> (type, built-in default).  None defaults let a --config file
# fill values in; flags always win when both are present.
_SOLVE_DEFAULTS = {
    "nodes": (int, 85),
    "rho_init": (float, 1.0),
    "gamma": (float, 1.001),
    "tau": (float, 1e-3),
    "bound_m": (float, 1e50),
    "bound_n": (float, 1e50),
    "eps_stop": (float, 1e-5),
    "max_outer": (int, 1000),
    "inner_grad_tol": (float, None),   # derived from eps_stop when unset
    "inner_max_iters": (int, 500),
}


def build_parser() -> _Parser:
    parser = _Parser(prog="ctpalm",
                     description="Augmented Lagrangian solver for "
                                 "continuous-time programs on a uniform grid.")
    parser.add_argument("--version", action="version", version=f"ctpalm {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", help="run the solver on a built-in problem")
    ps.add_argument("--problem", required=True, help="registry name")
    for flag, (typ, _) in _SOLVE_DEFAULTS.items():
        ps.add_argument(f"--{flag.replace('_', '-')}", dest=flag, type=typ, default=None)
    ps.add_argument("--x0", default=None,
                    help="initial state: comma-separated constants or a trajectory CSV")
    ps.add_argument("--u0", default=None,
                    help="initial equality multipliers (constants or CSV)")
    ps.add_argument("--v0", default=None,
                    help="initial inequality multipliers (constants or CSV)")
    ps.add_argument("--out-dir", default=".", help="output directory (default: .)")
    ps.add_argument("--config", default=None,
                    help="JSON file with the same keys as the flags; flags win")

    pc = sub.add_parser("check", help="evaluate optimality residuals for "
                                      "externally produced trajectories")
    pc.add_argument("problem", help="registry name")
    pc.add_argument("trajectory_csv", help="state trajectory (t,c0,...,c{n-1})")
    pc.add_argument("multipliers_csv",
                    help="multiplier trajectory (t,c0,...): p equality columns "
                         "then m inequality columns")
    pc.add_argument("--eps-stop", dest="eps_stop", type=float, default=1e-5)

    sub.add_parser("list-problems", help="print the registry")
    return parser


def _load_problem(name: str):
    try:
        return builtin(name)
    except UnknownProblemError as exc:
        raise CliError(EXIT_USAGE, str(exc.args[0])) from None


def _parse_constants(spec: str) -> Optional[np.ndarray]:
    try:
        return np.array([float(part) for part in spec.split(",")])
    except ValueError:
        return None


def _vector_spec_to_trajectory(spec: Optional[str], dim: int, grid,
                               flag: str) -> Optional[Trajectory]:
    """Constants broadcast to every node; otherwise the spec is a CSV path."""
    if spec is None:
        return None
    constants = _parse_constants(spec)
    if constants is not None:
        if constants.size != dim:
            raise CliError(EXIT_DATA,
                           f"{flag}: expected {dim} component(s), got {constants.size}")
        return Trajectory.constant(grid, constants)
    if not os.path.exists(spec):
        raise CliError(EXIT_DATA, f"{flag}: {spec!r} is neither a number list "
                                  f"nor an existing CSV file")
    try:
        traj = read_trajectory_csv(spec)
    except TrajectoryCsvError as exc:
        raise CliError(EXIT_DATA, f"{flag}: {exc}") from None
    if traj.dim != dim:
        raise CliError(EXIT_DATA, f"{flag}: expected {dim} column(s), got {traj.dim}")
    if not traj.grid.same_as(grid):
        raise CliError(EXIT_DATA, f"{flag}: CSV grid does not match the run grid")
    return traj


def _merged_options(args) -> dict:
    merged = {}
    file_values = {}
    if args.config is not None:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                file_values = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(EXIT_DATA, f"--config: {exc}") from None
        if not isinstance(file_values, dict):
            raise CliError(EXIT_DATA, "--config: top-level JSON object expected")
    for flag, (typ, default) in _SOLVE_DEFAULTS.items():
        value = getattr(args, flag)
        if value is None and flag in file_values:
            value = typ(file_values[flag])
        merged[flag] = default if value is None else value
    for flag in ("x0", "u0", "v0"):
        value = getattr(args, flag)
        if value is None and flag in file_values:
            value = str(file_values[flag])
        merged[flag] = value
    return merged


def _summary_bytes(summary: dict) -> bytes:
    return (json.dumps(summary, indent=2, sort_keys=True, allow_nan=False)
            + "\n").encode("utf-8")


def cmd_solve(args) -> int:
    problem = _load_problem(args.problem)
    opts = _merged_options(args)
    grid = make_uniform_grid(problem.horizon, opts["nodes"])

    x0 = _vector_spec_to_trajectory(opts["x0"], problem.n, grid, "--x0")
    if x0 is None:
        x0 = Trajectory.constant(grid, np.zeros(problem.n))
    u0 = _vector_spec_to_trajectory(opts["u0"], problem.p, grid, "--u0")
    v0 = _vector_spec_to_trajectory(opts["v0"], problem.m, grid, "--v0")

    inner_tol = opts["inner_grad_tol"]
    if inner_tol is None:
        inner_tol = max(1e-8, 0.1 * opts["eps_stop"])
    cfg = AlmConfig(rho_init=opts["rho_init"], gamma=opts["gamma"], tau=opts["tau"],
                    bound_M=opts["bound_m"], bound_N=opts["bound_n"],
                    eps_stop=opts["eps_stop"], max_outer=opts["max_outer"],
                    inner=InnerConfig(grad_tol=inner_tol,
                                      max_iters=opts["inner_max_iters"]))

    out_dir = args.out_dir
    os.makedirs(out_dir, exist_ok=True)
    tmp = {name: os.path.join(out_dir, f".tmp.{name}") for name in OUTPUT_FILES}
    try:
        with open(tmp["iterations.csv"], "w", encoding="utf-8") as log:
            report = solve(problem, cfg, x0, u0, v0, iteration_csv=log)

        combined = np.hstack([report.x.values, report.u.values, report.v.values])
        header = (["t"] + [f"x{i + 1}" for i in range(problem.n)]
                  + [f"u{i + 1}" for i in range(problem.p)]
                  + [f"v{i + 1}" for i in range(problem.m)])
        lines = [",".join(header)]
        for i, t in enumerate(grid.nodes):
            lines.append(",".join([f"{t:.17g}"] + [f"{v:.17g}" for v in combined[i]]))
        with open(tmp["trajectory.csv"], "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")

        reference = None
        if problem.reference is not None:
            reference = Trajectory(grid, np.array(
                [reference_solution(problem, t) for t in grid.nodes]))
        with open(tmp["trajectory.svg"], "w", encoding="utf-8") as fh:
            fh.write(trajectory_svg(report.x, reference,
                                    title=f"{problem.name}: solver trajectory"))
        with open(tmp["residuals.svg"], "w", encoding="utf-8") as fh:
            fh.write(residuals_svg(report.iterations,
                                   title=f"{problem.name}: residual history"))

        final = report.final
        summary = {
            "problem": problem.name,
            "status": report.status.value,
            "outer_iterations": len(report.iterations),
            "rho_final": final.rho,
            "residuals": {
                "stationarity_l1": final.residuals.stationarity_l1,
                "complementarity_sup": final.residuals.complementarity_sup,
                "multiplier_min": final.residuals.multiplier_min,
            },
            "infeas_measure": final.infeas_measure,
            "primal_infeasibility": final.primal_infeasibility,
            "objective": final.objective_quadrature,
            "certificates": {
                key: (cert.as_json_obj() if cert is not None else None)
                for key, cert in report.certificates.items()
            },
            "error_metrics": (report.error_metrics.as_json_obj()
                              if report.error_metrics is not None else None),
            "config": {
                "problem": problem.name, "nodes": opts["nodes"],
                "rho_init": cfg.rho_init, "gamma": cfg.gamma, "tau": cfg.tau,
                "bound_M": cfg.bound_M, "bound_N": cfg.bound_N,
                "eps_stop": cfg.eps_stop, "max_outer": cfg.max_outer,
                "inner_grad_tol": cfg.inner.grad_tol,
                "inner_max_iters": cfg.inner.max_iters,
                "x0": opts["x0"], "u0": opts["u0"], "v0": opts["v0"],
            },
        }
        with open(tmp["summary.json"], "wb") as fh:
            fh.write(_summary_bytes(summary))
    except BaseException:
        for path in tmp.values():
            if os.path.exists(path):
                os.unlink(path)
        raise
    # All files were produced; publish them together.
    for name in OUTPUT_FILES:
        os.replace(tmp[name], os.path.join(out_dir, name))

    print(f"{problem.name}: {report.status.value} after "
          f"{len(report.iterations)} outer iteration(s); outputs in {out_dir}")
    return _STATUS_EXIT[report.status]


def cmd_check(args) -> int:
    problem = _load_problem(args.problem)
    try:
        x = read_trajectory_csv(args.trajectory_csv)
        mults = read_trajectory_csv(args.multipliers_csv)
    except TrajectoryCsvError as exc:
        raise CliError(EXIT_DATA, str(exc)) from None
    except OSError as exc:
        raise CliError(EXIT_DATA, str(exc)) from None
    if x.dim != problem.n:
        raise CliError(EXIT_DATA,
                       f"trajectory has {x.dim} state column(s), expected {problem.n}")
    if mults.dim != problem.p + problem.m:
        raise CliError(EXIT_DATA,
                       f"multiplier file has {mults.dim} column(s), expected "
                       f"p+m={problem.p + problem.m}")
    if not x.grid.same_as(mults.grid):
        raise CliError(EXIT_DATA, "trajectory and multiplier files use different grids")
    grid = x.grid
    u = Trajectory(grid, mults.values[:, :problem.p])
    v_vals = mults.values[:, problem.p:]
    if v_vals.size and v_vals.min() < 0.0:
        raise CliError(EXIT_DATA, "negative inequality multiplier entries")
    v = Trajectory(grid, v_vals)

    residuals = akkt_residuals(problem, grid, x, u, v)
    max_h = 0.0
    max_gp = 0.0
    for i, t in enumerate(grid.nodes):
        if problem.p:
            max_h = max(max_h, float(np.abs(problem.eval_h(x.values[i], t)).max()))
        if problem.m:
            max_gp = max(max_gp, float(
                np.maximum(problem.eval_g(x.values[i], t), 0.0).max()))
    passed = (residuals.stationarity_l1 <= args.eps_stop
              and residuals.complementarity_sup <= args.eps_stop)
    infeas = infeasibility_report(problem, grid, x)
    suff = sufficiency_certificate(problem, grid, x, u, v)
    out = {
        "problem": problem.name,
        "eps_stop": args.eps_stop,
        "residuals": {
            "stationarity_l1": residuals.stationarity_l1,
            "complementarity_sup": residuals.complementarity_sup,
            "multiplier_min": residuals.multiplier_min,
        },
        "feasibility": {
            "max_equality_violation": max_h,
            "max_inequality_violation": max_gp,
            "feasibility_factor": feasibility_factor(problem, grid, x),
        },
        "certificates": {
            "sufficiency": suff.as_json_obj(),
            "infeasibility": infeas.as_json_obj() if infeas is not None else None,
        },
        "pass": passed,
    }
    print(json.dumps(out, indent=2, sort_keys=True, allow_nan=False))
    return EXIT_OK if passed else EXIT_CHECK_FAILED


def cmd_list() -> int:
    for name in builtin_names():
        prob = builtin(name)
        ref = "yes" if prob.reference is not None else "no"
        print(f"{name}  n={prob.n} p={prob.p} m={prob.m} "
              f"T={prob.horizon:g} ref={ref}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "solve":
            return cmd_solve(args)
        if args.command == "check":
            return cmd_check(args)
        return cmd_list()
    except CliError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
