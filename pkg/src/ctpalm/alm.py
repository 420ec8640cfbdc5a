"""Outer safeguarded augmented-Lagrangian loop.

Each outer iteration solves the node-wise penalized subproblems warm-started
from the previous iterate, applies the first-order multiplier update, checks
the asymptotic optimality test on the updated pair, and then runs the
infeasibility-progress test that decides whether the penalty parameter grows.
Multiplier estimates are projected back into fixed safeguard boxes before they
enter the next subproblem.

Termination additionally requires primal feasibility at the stopping
tolerance.  The stationarity and complementarity residuals alone can vanish
on infeasible problems (a violated constraint has zero complementarity
residual by construction), and reporting success there would be wrong; the
infeasibility diagnostics cover that exit instead.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import IO, Optional

import numpy as np

from .grid import TimeGrid, Trajectory, _trapezoid_sum, sup_node_norm
from .inner import InnerConfig, InnerStatus, solve_subproblem
from .lagrangian import Residuals
from .problems import EvalBundle, ProblemDefinition, evaluate_all

ITERATION_CSV_HEADER = ("k,rho,stationarity_l1,complementarity_sup,"
                        "infeas_measure,objective,inner_status,inner_max_grad")

# Consecutive all-diverged subproblem solves tolerated before giving up.
_DIVERGENCE_PATIENCE = 50


class SolveStatus(enum.Enum):
    AKKT_CONVERGED = "AkktConverged"
    MAX_OUTER_REACHED = "MaxOuterReached"
    INNER_FAILURE = "InnerFailure"


@dataclass(frozen=True)
class AlmConfig:
    """All outer-loop parameters; defaults follow the reference experiments."""

    rho_init: float = 1.0
    gamma: float = 1.001
    tau: float = 1e-3
    bound_M: float = 1e50
    bound_N: float = 1e50
    eps_stop: float = 1e-5
    max_outer: int = 1000
    inner: Optional[InnerConfig] = None

    def __post_init__(self):
        if self.rho_init <= 0:
            raise ValueError("rho_init must be positive")
        if self.gamma <= 1.0:
            raise ValueError("gamma must exceed 1")
        if not 0.0 < self.tau < 1.0:
            raise ValueError("tau must lie in (0, 1)")
        if self.bound_M <= 0 or self.bound_N <= 0:
            raise ValueError("safeguard bounds must be positive")
        if self.eps_stop <= 0 or self.max_outer < 1:
            raise ValueError("eps_stop must be positive and max_outer >= 1")
        if self.inner is None:
            # Inner solves one order tighter than the outer stopping test,
            # floored so the inner tolerance never chases rounding noise.
            object.__setattr__(
                self, "inner",
                InnerConfig(grad_tol=max(1e-8, 0.1 * self.eps_stop)))


@dataclass
class AlmState:
    """Evolving iterate of the outer loop."""

    k: int
    rho: float
    x: Trajectory
    u_tilde: Trajectory
    v_tilde: Trajectory
    u: Optional[Trajectory] = None
    v: Optional[Trajectory] = None
    H: Optional[Trajectory] = None
    V: Optional[Trajectory] = None
    infeas_measure: float = 0.0


@dataclass(frozen=True)
class IterationRecord:
    k: int
    rho: float
    residuals: Residuals
    infeas_measure: float
    primal_infeasibility: float
    objective_quadrature: float
    inner_worst_status: InnerStatus
    inner_max_grad: float

    def csv_row(self) -> str:
        return (f"{self.k},{self.rho:.17g},{self.residuals.stationarity_l1:.17g},"
                f"{self.residuals.complementarity_sup:.17g},"
                f"{self.infeas_measure:.17g},{self.objective_quadrature:.17g},"
                f"{self.inner_worst_status.value},{self.inner_max_grad:.17g}")


@dataclass
class SolveReport:
    status: SolveStatus
    problem_name: str
    grid: TimeGrid
    iterations: list
    x: Trajectory
    u: Trajectory
    v: Trajectory
    certificates: dict = field(default_factory=dict)
    error_metrics: Optional[object] = None

    @property
    def final(self) -> IterationRecord:
        return self.iterations[-1]

    @property
    def rho_final(self) -> float:
        return self.iterations[-1].rho


def multiplier_update(bundle: EvalBundle, u_tilde: np.ndarray, v_tilde: np.ndarray,
                      rho: float):
    """First-order update: u = u~ + rho h, v = max(v~ + rho g, 0) at one node."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    u = u_tilde + rho * bundle.h
    v = np.maximum(v_tilde + rho * bundle.g, 0.0)
    return u, v


def safeguard_project(u: np.ndarray, v: np.ndarray, bound_M: float, bound_N: float):
    """Clamp equality multipliers into [-M, M] and inequality ones into [0, N]."""
    if bound_M <= 0 or bound_N <= 0:
        raise ValueError("safeguard bounds must be positive")
    return np.clip(u, -bound_M, bound_M), np.clip(v, 0.0, bound_N)


def penalty_update(state: AlmState, prev_infeas: float, cur_H: Trajectory,
                   cur_V: Trajectory, cfg: AlmConfig) -> float:
    """Keep rho when infeasibility improved by factor tau, else grow it."""
    if prev_infeas < 0:
        raise ValueError("prev_infeas must be nonnegative")
    cur = max(sup_node_norm(cur_H), sup_node_norm(cur_V))
    if cur <= cfg.tau * prev_infeas:
        return state.rho
    return cfg.gamma * state.rho


def _constant_like(grid: TimeGrid, dim: int) -> Trajectory:
    return Trajectory(grid, np.zeros((grid.num_nodes, dim)))


def solve(problem: ProblemDefinition, cfg: AlmConfig, x0: Trajectory,
          u_tilde1: Optional[Trajectory] = None, v_tilde1: Optional[Trajectory] = None,
          iteration_csv: Optional[IO] = None) -> SolveReport:
    """Run the outer loop from (x0, u~1, v~1) until the optimality test passes.

    Omitted initial multipliers default to zero.  When `iteration_csv` is
    given, the per-iteration log is written to it incrementally (header plus
    one row per outer iteration, flushed as produced).
    """
    grid = x0.grid
    if x0.dim != problem.n:
        raise ValueError(f"x0 has dim {x0.dim}, problem expects n={problem.n}")
    if u_tilde1 is None:
        u_tilde1 = _constant_like(grid, problem.p)
    if v_tilde1 is None:
        v_tilde1 = _constant_like(grid, problem.m)
    if u_tilde1.dim != problem.p or v_tilde1.dim != problem.m:
        raise ValueError("initial multiplier trajectories do not match problem dims")
    if not (grid.same_as(u_tilde1.grid) and grid.same_as(v_tilde1.grid)):
        raise ValueError("initial trajectories must share the grid")
    if u_tilde1.values.size and np.abs(u_tilde1.values).max() > cfg.bound_M:
        raise ValueError("initial equality multipliers outside the safeguard box")
    if v_tilde1.values.size and (
            v_tilde1.values.min() < 0.0 or v_tilde1.values.max() > cfg.bound_N):
        raise ValueError("initial inequality multipliers outside the safeguard box")

    n_nodes = grid.num_nodes
    nodes = grid.nodes

    # Baseline infeasibility from the starting guess: H0 = h(x0),
    # V0_j = max(g_j(x0), 0).
    h0 = np.empty((n_nodes, problem.p))
    v0m = np.empty((n_nodes, problem.m))
    for i in range(n_nodes):
        b = evaluate_all(problem, x0.values[i], nodes[i])
        h0[i] = b.h
        v0m[i] = np.maximum(b.g, 0.0)
    prev_infeas = max(sup_node_norm(Trajectory(grid, h0)),
                      sup_node_norm(Trajectory(grid, v0m)))

    state = AlmState(k=0, rho=cfg.rho_init, x=x0, u_tilde=u_tilde1, v_tilde=v_tilde1)
    records = []
    diverged_streak = 0
    status = SolveStatus.MAX_OUTER_REACHED

    if iteration_csv is not None:
        iteration_csv.write(ITERATION_CSV_HEADER + "\n")
        iteration_csv.flush()

    for k in range(1, cfg.max_outer + 1):
        state.k = k
        x_traj, inner_worst, inner_max_grad = solve_subproblem(
            problem, grid, state.x, state.u_tilde, state.v_tilde, state.rho, cfg.inner)
        state.x = x_traj

        # One evaluation pass feeds the update, the residuals and the log.
        u_rows = np.empty((n_nodes, problem.p))
        v_rows = np.empty((n_nodes, problem.m))
        h_rows = np.empty((n_nodes, problem.p))
        vmeas_rows = np.empty((n_nodes, problem.m))
        grad_l1 = np.empty(n_nodes)
        phi_vals = np.empty(n_nodes)
        comp = 0.0
        primal_infeas = 0.0
        for i in range(n_nodes):
            t = nodes[i]
            b = evaluate_all(problem, x_traj.values[i], t)
            u_i, v_i = multiplier_update(b, state.u_tilde.values[i],
                                         state.v_tilde.values[i], state.rho)
            u_rows[i] = u_i
            v_rows[i] = v_i
            h_rows[i] = b.h
            phi_vals[i] = b.phi
            gl = b.grad_phi.copy()
            if problem.p:
                gl += b.jac_h.T @ u_i
                primal_infeas = max(primal_infeas, float(np.abs(b.h).max()))
            if problem.m:
                gl += b.jac_g.T @ v_i
                vmeas_rows[i] = np.maximum(b.g, -state.v_tilde.values[i] / state.rho)
                comp = max(comp, float((v_i * np.maximum(-b.g, 0.0)).max()))
                gplus = float(np.maximum(b.g, 0.0).max())
                if gplus > primal_infeas:
                    primal_infeas = gplus
            grad_l1[i] = float(np.abs(gl).sum())

        state.u = Trajectory(grid, u_rows)
        state.v = Trajectory(grid, v_rows)
        state.H = Trajectory(grid, h_rows)
        state.V = Trajectory(grid, vmeas_rows)
        residuals = Residuals(
            stationarity_l1=_trapezoid_sum(grad_l1, grid.spacing),
            complementarity_sup=comp,
            multiplier_min=float(v_rows.min()) if v_rows.size else 0.0)
        state.infeas_measure = max(sup_node_norm(state.H), sup_node_norm(state.V))
        record = IterationRecord(
            k=k, rho=state.rho, residuals=residuals,
            infeas_measure=state.infeas_measure,
            primal_infeasibility=primal_infeas,
            objective_quadrature=_trapezoid_sum(phi_vals, grid.spacing),
            inner_worst_status=inner_worst, inner_max_grad=inner_max_grad)
        records.append(record)
        if iteration_csv is not None:
            iteration_csv.write(record.csv_row() + "\n")
            iteration_csv.flush()

        if (residuals.stationarity_l1 <= cfg.eps_stop
                and residuals.complementarity_sup <= cfg.eps_stop
                and primal_infeas <= cfg.eps_stop):
            status = SolveStatus.AKKT_CONVERGED
            break

        diverged_streak = diverged_streak + 1 if inner_worst is InnerStatus.DIVERGED else 0
        if diverged_streak >= _DIVERGENCE_PATIENCE:
            status = SolveStatus.INNER_FAILURE
            break

        rho_next = penalty_update(state, prev_infeas, state.H, state.V, cfg)
        prev_infeas = state.infeas_measure
        u_next, v_next = safeguard_project(u_rows, v_rows, cfg.bound_M, cfg.bound_N)
        state.u_tilde = Trajectory(grid, u_next)
        state.v_tilde = Trajectory(grid, v_next)
        state.rho = rho_next

    report = SolveReport(status=status, problem_name=problem.name, grid=grid,
                         iterations=records, x=state.x, u=state.u, v=state.v)
    _attach_diagnostics(report, problem, cfg)
    return report


def _attach_diagnostics(report: SolveReport, problem: ProblemDefinition,
                        cfg: AlmConfig) -> None:
    """Certificates and reference-error metrics for the final iterate."""
    from . import diagnostics  # local import to keep module layering acyclic

    final = report.final
    certs = {"akkt": None, "sufficiency": None, "infeasibility": None}
    if report.status is SolveStatus.AKKT_CONVERGED:
        certs["akkt"] = diagnostics.Certificate(
            kind=diagnostics.CertificateKind.AKKT_HOLDS,
            evidence={
                "stationarity_l1": final.residuals.stationarity_l1,
                "complementarity_sup": final.residuals.complementarity_sup,
                "multiplier_min": final.residuals.multiplier_min,
                "primal_infeasibility": final.primal_infeasibility,
                "eps_stop": cfg.eps_stop,
            })
        # Feasibility at eps_stop is guaranteed by the stopping test, so the
        # convexity-based certificate is meaningful here and only here.
        certs["sufficiency"] = diagnostics.sufficiency_certificate(
            problem, report.grid, report.x, report.u, report.v)
    else:
        certs["infeasibility"] = diagnostics.infeasibility_report(
            problem, report.grid, report.x)
    report.certificates = certs
    if problem.reference is not None:
        report.error_metrics = diagnostics.solution_error(report.grid, report.x, problem)
