"""Post-solve analysis: optimality certificates, infeasibility verdicts,
and error metrics against closed-form references."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .grid import TimeGrid, Trajectory, _trapezoid_sum
from .lagrangian import feasibility_stationarity_residual
from .problems import MissingReferenceError, ProblemDefinition, reference_solution

# Default tolerances: loose enough to absorb quadrature and inner-solver slack.
SUFFICIENCY_TOL = 1e-6
FEASIBILITY_TOL = 1e-6
STATIONARITY_TOL = 1e-4


class CertificateKind(enum.Enum):
    AKKT_HOLDS = "AkktHolds"
    GLOBAL_OPTIMAL_BY_CONVEXITY = "GlobalOptimalByConvexity"
    NOT_APPLICABLE = "NotApplicable"
    HYPOTHESIS_VIOLATED = "HypothesisViolated"
    INFEASIBLE_BUT_THETA_STATIONARY = "InfeasibleButThetaStationary"
    INFEASIBLE_NOT_STATIONARY = "InfeasibleNotStationary"


@dataclass(frozen=True)
class Certificate:
    kind: CertificateKind
    evidence: dict = field(default_factory=dict)

    def as_json_obj(self) -> dict:
        return {"kind": self.kind.value, "evidence": dict(self.evidence)}


@dataclass(frozen=True)
class ErrorMetrics:
    sup_error: float
    l1_error: float
    masked_nodes: tuple

    def as_json_obj(self) -> dict:
        return {"sup_error": self.sup_error, "l1_error": self.l1_error,
                "masked_nodes": list(self.masked_nodes)}


def sufficiency_certificate(problem: ProblemDefinition, grid: TimeGrid,
                            x: Trajectory, u: Trajectory, v: Trajectory,
                            tol: float = SUFFICIENCY_TOL) -> Certificate:
    """Convexity-based global-optimality check.

    Requires every convexity flag and a nonnegative multiplier/constraint
    pairing sum_i u_i h_i + sum_j v_j g_j >= -tol at every node.  The pairing
    condition is positively homogeneous in (u, v), so any positive rescaling
    of multipliers gives the same verdict at tol = 0.
    """
    if not problem.convexity.all_hold():
        flags = {
            "phi_convex": problem.convexity.phi_convex,
            "g_convex": list(problem.convexity.g_convex),
            "h_affine": list(problem.convexity.h_affine),
        }
        return Certificate(CertificateKind.NOT_APPLICABLE, {"convexity": flags})
    worst = 0.0
    worst_node = -1
    for i in range(grid.num_nodes):
        t = grid.nodes[i]
        xi = x.values[i]
        s = 0.0
        if problem.p:
            s += float(u.values[i] @ np.asarray(problem.eval_h(xi, t), dtype=float))
        if problem.m:
            s += float(v.values[i] @ np.asarray(problem.eval_g(xi, t), dtype=float))
        if s < worst:
            worst = s
            worst_node = i
    if worst >= -tol:
        return Certificate(CertificateKind.GLOBAL_OPTIMAL_BY_CONVEXITY,
                           {"min_pairing_sum": worst, "tol": tol})
    return Certificate(CertificateKind.HYPOTHESIS_VIOLATED,
                       {"min_pairing_sum": worst, "tol": tol,
                        "worst_node": worst_node,
                        "worst_time": float(grid.nodes[worst_node])})


def infeasibility_report(problem: ProblemDefinition, grid: TimeGrid, x: Trajectory,
                         feas_tol: float = FEASIBILITY_TOL,
                         stat_tol: float = STATIONARITY_TOL) -> Optional[Certificate]:
    """Classify an infeasible trajectory; None when the point is feasible.

    An infeasible point whose squared-violation gradient vanishes is the
    expected limit of the method on problems with no feasible point at all.
    """
    violation = 0.0
    for i in range(grid.num_nodes):
        t = grid.nodes[i]
        xi = x.values[i]
        if problem.p:
            h = np.asarray(problem.eval_h(xi, t), dtype=float)
            if h.size:
                violation = max(violation, float(np.abs(h).max()))
        if problem.m:
            g = np.asarray(problem.eval_g(xi, t), dtype=float)
            if g.size:
                violation = max(violation, float(np.maximum(g, 0.0).max()))
    if violation <= feas_tol:
        return None
    residual = feasibility_stationarity_residual(problem, grid, x)
    evidence = {"max_violation": violation, "feas_tol": feas_tol,
                "stationarity_residual": residual, "stat_tol": stat_tol}
    if residual <= stat_tol:
        return Certificate(CertificateKind.INFEASIBLE_BUT_THETA_STATIONARY, evidence)
    return Certificate(CertificateKind.INFEASIBLE_NOT_STATIONARY, evidence)


def solution_error(grid: TimeGrid, x: Trajectory,
                   problem: ProblemDefinition) -> ErrorMetrics:
    """Sup and integrated-l1 distance between x and the reference at the nodes.

    Nodes strictly within one grid spacing of a declared reference
    discontinuity are masked: excluded from the sup and zeroed in the
    quadrature.
    """
    if problem.reference is None:
        raise MissingReferenceError(f"problem {problem.name!r} has no reference solution")
    h = grid.spacing
    masked = []
    keep = np.ones(grid.num_nodes, dtype=bool)
    for i, t in enumerate(grid.nodes):
        for d in problem.reference_discontinuities:
            if abs(t - d) < h * (1.0 - 1e-9):
                masked.append(i)
                keep[i] = False
                break
    diffs = np.empty((grid.num_nodes, x.dim))
    for i, t in enumerate(grid.nodes):
        diffs[i] = np.abs(x.values[i] - reference_solution(problem, t))
    sup_err = float(diffs[keep].max()) if keep.any() else 0.0
    integrand = diffs.sum(axis=1)
    integrand[~keep] = 0.0
    l1_err = _trapezoid_sum(integrand, h)
    return ErrorMetrics(sup_error=sup_err, l1_error=l1_err, masked_nodes=tuple(masked))
