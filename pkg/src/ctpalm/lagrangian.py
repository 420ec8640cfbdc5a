"""Lagrangian and augmented Lagrangian evaluation, plus the residual engine.

The stationarity residual integrates the l1 norm of the Lagrangian gradient
over time; that is the exact supremum of |int grad.L . gamma dt| over test
directions bounded by 1 in the sup norm, so a single number upper-bounds every
normalized test direction.  Complementarity is measured pointwise through
v_j * max(-g_j, 0) and reduced with a max over nodes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import TimeGrid, Trajectory, _trapezoid_sum, l1_time_norm
from .problems import ProblemDefinition


@dataclass(frozen=True)
class MultiplierSet:
    """One node's equality and inequality multipliers; v must be nonnegative.

    Raw pre-projection values (which may be negative) travel as plain arrays;
    only validated multiplier iterates are wrapped in this type.
    """

    u: np.ndarray = field(default_factory=lambda: np.zeros(0))
    v: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        object.__setattr__(self, "u", np.atleast_1d(np.asarray(self.u, dtype=float)))
        object.__setattr__(self, "v", np.atleast_1d(np.asarray(self.v, dtype=float)))
        if self.v.size and self.v.min() < 0.0:
            raise ValueError("inequality multipliers must be nonnegative")
        if not (np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.v))):
            raise ValueError("multipliers must be finite")


@dataclass(frozen=True)
class Residuals:
    """Residuals of the asymptotic optimality test evaluated on a grid."""

    stationarity_l1: float
    complementarity_sup: float
    multiplier_min: float


def lagrangian_gradient(problem: ProblemDefinition, x: np.ndarray,
                        mult: MultiplierSet, t: float) -> np.ndarray:
    """grad phi + sum_i u_i grad h_i + sum_j v_j grad g_j at one node."""
    x = np.asarray(x, dtype=float)
    out = np.asarray(problem.eval_grad_phi(x, t), dtype=float).copy()
    if problem.p:
        out += np.asarray(problem.eval_jac_h(x, t), dtype=float).T @ mult.u
    if problem.m:
        out += np.asarray(problem.eval_jac_g(x, t), dtype=float).T @ mult.v
    return out


def _penalty_value(problem: ProblemDefinition, x: np.ndarray,
                   u: np.ndarray, v: np.ndarray, rho: float, t: float) -> float:
    """Quadratic penalty part of the augmented Lagrangian (shifted violations)."""
    pen = 0.0
    if problem.p:
        r = np.asarray(problem.eval_h(x, t), dtype=float) + u / rho
        pen += 0.5 * rho * float(r @ r)
    if problem.m:
        s = np.maximum(np.asarray(problem.eval_g(x, t), dtype=float) + v / rho, 0.0)
        pen += 0.5 * rho * float(s @ s)
    return pen


def aug_lagrangian_value(problem: ProblemDefinition, x: np.ndarray,
                         safeguarded: MultiplierSet, rho: float, t: float) -> float:
    """phi + (rho/2) sum [h_i + u_i/rho]^2 + (rho/2) sum [max(0, g_j + v_j/rho)]^2."""
    if rho <= 0:
        raise ValueError(f"rho must be positive, got {rho}")
    x = np.asarray(x, dtype=float)
    return float(problem.eval_phi(x, t)) + _penalty_value(
        problem, x, safeguarded.u, safeguarded.v, rho, t
    )


def _aug_gradient(problem: ProblemDefinition, x: np.ndarray,
                  u: np.ndarray, v: np.ndarray, rho: float, t: float) -> np.ndarray:
    out = np.asarray(problem.eval_grad_phi(x, t), dtype=float).copy()
    if problem.p:
        coeff = u + rho * np.asarray(problem.eval_h(x, t), dtype=float)
        out += np.asarray(problem.eval_jac_h(x, t), dtype=float).T @ coeff
    if problem.m:
        coeff = np.maximum(v + rho * np.asarray(problem.eval_g(x, t), dtype=float), 0.0)
        out += np.asarray(problem.eval_jac_g(x, t), dtype=float).T @ coeff
    return out


def aug_lagrangian_gradient(problem: ProblemDefinition, x: np.ndarray,
                            safeguarded: MultiplierSet, rho: float, t: float) -> np.ndarray:
    """grad phi + sum (u_i + rho h_i) grad h_i + sum max(0, v_j + rho g_j) grad g_j.

    Identical (bitwise) to the Lagrangian gradient at first-order-updated
    multipliers, which is what makes the update formulas consistent with the
    stationarity residual.
    """
    if rho <= 0:
        raise ValueError(f"rho must be positive, got {rho}")
    return _aug_gradient(problem, np.asarray(x, dtype=float),
                         safeguarded.u, safeguarded.v, rho, t)


def _require_shared_grid(grid: TimeGrid, *trajs: Trajectory) -> None:
    for tr in trajs:
        if not grid.same_as(tr.grid):
            raise ValueError("trajectories must share the grid")


def akkt_residuals(problem: ProblemDefinition, grid: TimeGrid, x_traj: Trajectory,
                   u_traj: Trajectory, v_traj: Trajectory) -> Residuals:
    """Stationarity, complementarity and multiplier-sign residuals on a grid."""
    _require_shared_grid(grid, x_traj, u_traj, v_traj)
    if u_traj.dim != problem.p or v_traj.dim != problem.m or x_traj.dim != problem.n:
        raise ValueError("trajectory dimensions do not match the problem")
    if problem.m and v_traj.values.min() < 0.0:
        raise ValueError("negative inequality multiplier entry")
    n_nodes = grid.num_nodes
    grad_l1 = np.empty(n_nodes)
    comp = 0.0
    for i in range(n_nodes):
        t = grid.nodes[i]
        x = x_traj.values[i]
        gl = np.asarray(problem.eval_grad_phi(x, t), dtype=float).copy()
        if problem.p:
            gl += np.asarray(problem.eval_jac_h(x, t), dtype=float).T @ u_traj.values[i]
        if problem.m:
            g = np.asarray(problem.eval_g(x, t), dtype=float)
            gl += np.asarray(problem.eval_jac_g(x, t), dtype=float).T @ v_traj.values[i]
            node_comp = float((v_traj.values[i] * np.maximum(-g, 0.0)).max())
            if node_comp > comp:
                comp = node_comp
        grad_l1[i] = float(np.abs(gl).sum())
    stationarity = _trapezoid_sum(grad_l1, grid.spacing)
    mult_min = float(v_traj.values.min()) if v_traj.values.size else 0.0
    return Residuals(stationarity_l1=stationarity, complementarity_sup=comp,
                     multiplier_min=mult_min)


def feasibility_factor(problem: ProblemDefinition, grid: TimeGrid,
                       x_traj: Trajectory) -> float:
    """Integral of sum h_i^2 + sum max(g_j, 0)^2 along the trajectory."""
    _require_shared_grid(grid, x_traj)
    vals = np.empty(grid.num_nodes)
    for i in range(grid.num_nodes):
        t = grid.nodes[i]
        x = x_traj.values[i]
        total = 0.0
        if problem.p:
            h = np.asarray(problem.eval_h(x, t), dtype=float)
            total += float(h @ h)
        if problem.m:
            gp = np.maximum(np.asarray(problem.eval_g(x, t), dtype=float), 0.0)
            total += float(gp @ gp)
        vals[i] = total
    return _trapezoid_sum(vals, grid.spacing)


def feasibility_stationarity_residual(problem: ProblemDefinition, grid: TimeGrid,
                                      x_traj: Trajectory) -> float:
    """l1-in-time norm of the gradient of the squared-violation integrand.

    The integrand gradient is 2 sum h_i grad h_i + 2 sum max(g_j, 0) grad g_j;
    a zero residual certifies stationarity for the violation-minimization
    problem (the scale factor is immaterial for that test).
    """
    _require_shared_grid(grid, x_traj)
    rows = np.empty((grid.num_nodes, problem.n))
    for i in range(grid.num_nodes):
        t = grid.nodes[i]
        x = x_traj.values[i]
        gvec = np.zeros(problem.n)
        if problem.p:
            h = np.asarray(problem.eval_h(x, t), dtype=float)
            gvec += np.asarray(problem.eval_jac_h(x, t), dtype=float).T @ (2.0 * h)
        if problem.m:
            gp = np.maximum(np.asarray(problem.eval_g(x, t), dtype=float), 0.0)
            gvec += np.asarray(problem.eval_jac_g(x, t), dtype=float).T @ (2.0 * gp)
        rows[i] = gvec
    return l1_time_norm(Trajectory(grid, rows))
