"""Problem abstraction and the registry of built-in instances.

A problem is an integral cost phi over [0, T] subject to pointwise equality
constraints h = 0 and inequality constraints g <= 0, all functions of the
state vector x and time t.  Evaluators are plain callables of (x, t); user
problems enter through this same dataclass, not through a text format.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .grid import TimeGrid, Trajectory


class UnknownProblemError(KeyError):
    """Requested registry name does not exist."""


class EvaluationError(RuntimeError):
    """An evaluator produced a non-finite value; carries (t, x)."""

    def __init__(self, what: str, t: float, x: np.ndarray):
        super().__init__(f"{what} returned a non-finite value at t={t!r}, x={x!r}")
        self.t = t
        self.x = np.array(x)


class MissingReferenceError(ValueError):
    """Problem has no closed-form reference solution attached."""


@dataclass(frozen=True)
class Convexity:
    """Structure flags used by the global-optimality certificate.

    Trusted metadata: nothing verifies these numerically.
    """

    phi_convex: bool
    g_convex: tuple
    h_affine: tuple

    def all_hold(self) -> bool:
        return self.phi_convex and all(self.g_convex) and all(self.h_affine)


@dataclass(frozen=True)
class ProblemDefinition:
    """Dimensions, evaluators and metadata for one problem instance.

    Evaluators must be pure: repeated calls with identical (x, t) return
    identical values, and they must be callable from several workers at once.
    """

    name: str
    n: int
    p: int
    m: int
    horizon: float
    eval_phi: Callable[[np.ndarray, float], float]
    eval_grad_phi: Callable[[np.ndarray, float], np.ndarray]
    eval_h: Callable[[np.ndarray, float], np.ndarray]
    eval_jac_h: Callable[[np.ndarray, float], np.ndarray]
    eval_g: Callable[[np.ndarray, float], np.ndarray]
    eval_jac_g: Callable[[np.ndarray, float], np.ndarray]
    convexity: Convexity
    reference: Optional[Callable[[float], np.ndarray]] = None
    reference_discontinuities: tuple = ()

    def __post_init__(self):
        if self.n < 1 or self.p < 0 or self.m < 0:
            raise ValueError("dimensions must satisfy n >= 1, p >= 0, m >= 0")


@dataclass(frozen=True)
class EvalBundle:
    """Single-pass cache of every evaluator at one (x, t)."""

    phi: float
    grad_phi: np.ndarray
    h: np.ndarray
    jac_h: np.ndarray
    g: np.ndarray
    jac_g: np.ndarray


def evaluate_all(problem: ProblemDefinition, x: np.ndarray, t: float) -> EvalBundle:
    """Evaluate phi, h, g and their spatial derivatives at one point."""
    x = np.asarray(x, dtype=float)
    phi = float(problem.eval_phi(x, t))
    grad_phi = np.asarray(problem.eval_grad_phi(x, t), dtype=float)
    h = np.asarray(problem.eval_h(x, t), dtype=float).reshape(problem.p)
    jac_h = np.asarray(problem.eval_jac_h(x, t), dtype=float).reshape(problem.p, problem.n)
    g = np.asarray(problem.eval_g(x, t), dtype=float).reshape(problem.m)
    jac_g = np.asarray(problem.eval_jac_g(x, t), dtype=float).reshape(problem.m, problem.n)
    for what, arr in (("phi", phi), ("grad_phi", grad_phi), ("h", h),
                      ("jac_h", jac_h), ("g", g), ("jac_g", jac_g)):
        if not np.all(np.isfinite(arr)):
            raise EvaluationError(what, t, x)
    return EvalBundle(phi, grad_phi, h, jac_h, g, jac_g)


def reference_solution(problem: ProblemDefinition, t: float) -> np.ndarray:
    """Closed-form solution sample at time t."""
    if problem.reference is None:
        raise MissingReferenceError(f"problem {problem.name!r} has no reference solution")
    return np.asarray(problem.reference(t), dtype=float)


# ---------------------------------------------------------------------------
# Built-in instances
# ---------------------------------------------------------------------------

_E2 = np.zeros((0, 2))
_E3 = np.zeros((0, 3))
_E0 = np.zeros(0)


def _ex1() -> ProblemDefinition:
    # minimize  int x1^2 + x2  s.t.  -x2 <= 0,  -x1^2 - x2 <= 0   on [0, 1]
    return ProblemDefinition(
        name="ex1", n=2, p=0, m=2, horizon=1.0,
        eval_phi=lambda x, t: x[0] ** 2 + x[1],
        eval_grad_phi=lambda x, t: np.array([2.0 * x[0], 1.0]),
        eval_h=lambda x, t: _E0,
        eval_jac_h=lambda x, t: _E2,
        eval_g=lambda x, t: np.array([-x[1], -x[0] ** 2 - x[1]]),
        eval_jac_g=lambda x, t: np.array([[0.0, -1.0], [-2.0 * x[0], -1.0]]),
        convexity=Convexity(phi_convex=True, g_convex=(True, False), h_affine=()),
        reference=lambda t: np.array([0.0, 0.0]),
    )


def _ex2() -> ProblemDefinition:
    # minimize  int x1  subject to three parabolic constraints pinching x at (0, t)
    return ProblemDefinition(
        name="ex2", n=2, p=0, m=3, horizon=1.0,
        eval_phi=lambda x, t: x[0],
        eval_grad_phi=lambda x, t: np.array([1.0, 0.0]),
        eval_h=lambda x, t: _E0,
        eval_jac_h=lambda x, t: _E2,
        eval_g=lambda x, t: np.array([
            x[0] ** 2 - 2.0 * x[0] + x[1] - t,
            x[0] ** 2 - 2.0 * x[0] - x[1] + t,
            -x[0] ** 2 + 0.5 * x[0] + x[1] - t,
        ]),
        eval_jac_g=lambda x, t: np.array([
            [2.0 * x[0] - 2.0, 1.0],
            [2.0 * x[0] - 2.0, -1.0],
            [-2.0 * x[0] + 0.5, 1.0],
        ]),
        convexity=Convexity(phi_convex=True, g_convex=(True, True, False), h_affine=()),
        reference=lambda t: np.array([0.0, t]),
    )


def _ex3() -> ProblemDefinition:
    # Equality + inequality constrained instance with solution (1, 1, 0).
    return ProblemDefinition(
        name="ex3", n=3, p=1, m=2, horizon=1.0,
        eval_phi=lambda x, t: (x[0] - 1.0) ** 2 + (x[1] - 1.0) ** 2 - x[2] ** 2,
        eval_grad_phi=lambda x, t: np.array([
            2.0 * (x[0] - 1.0), 2.0 * (x[1] - 1.0), -2.0 * x[2],
        ]),
        eval_h=lambda x, t: np.array([x[0] ** 2 + x[1] ** 2 - x[2] - 2.0]),
        eval_jac_h=lambda x, t: np.array([[2.0 * x[0], 2.0 * x[1], -1.0]]),
        eval_g=lambda x, t: np.array([
            2.0 * x[0] * x[1] - 4.0 * x[1] - x[2] + 2.0,
            -x[0] - 0.5 * x[2] + 1.0,
        ]),
        eval_jac_g=lambda x, t: np.array([
            [2.0 * x[1], 2.0 * x[0] - 4.0, -1.0],
            [-1.0, 0.0, -0.5],
        ]),
        convexity=Convexity(phi_convex=False, g_convex=(False, True), h_affine=(False,)),
        reference=lambda t: np.array([1.0, 1.0, 0.0]),
    )


def _ex4_A(t: float) -> np.ndarray:
    # sign(0) = 0, so at the kink t = 1 the third row degenerates to (0, 0).
    return np.array([
        [0.0, -1.0],
        [-1.0, 0.0],
        [np.sign(t - 1.0), np.sign(1.0 - t)],
        [1.0, 1.0],
        [0.0, 1.0],
    ])


def _ex4_b(t: float) -> np.ndarray:
    return np.array([0.0, 0.0, 0.0, 3.0, 0.25 + 0.625 * t])


def _ex4_c(t: float) -> np.ndarray:
    return np.array([(t - 1.0) * np.sign(1.0 - t), -1.0])


def _ex4_reference(t: float) -> np.ndarray:
    x1 = 11.0 / 4.0 - 5.0 * t / 8.0 if t <= 1.0 else 0.25 + 0.625 * t
    return np.array([x1, 0.25 + 0.625 * t])


def _ex4() -> ProblemDefinition:
    # Linear cost c(t).x with A(t) x <= b(t); the solution jumps at t = 1.
    return ProblemDefinition(
        name="ex4", n=2, p=0, m=5, horizon=2.0,
        eval_phi=lambda x, t: float(_ex4_c(t) @ x),
        eval_grad_phi=lambda x, t: _ex4_c(t),
        eval_h=lambda x, t: _E0,
        eval_jac_h=lambda x, t: _E2,
        eval_g=lambda x, t: _ex4_A(t) @ x - _ex4_b(t),
        eval_jac_g=lambda x, t: _ex4_A(t),
        convexity=Convexity(phi_convex=True, g_convex=(True,) * 5, h_affine=()),
        reference=_ex4_reference,
        reference_discontinuities=(1.0,),
    )


def _akkt_example() -> ProblemDefinition:
    # KKT never holds at the solution (0, 0), but asymptotic multipliers exist.
    return ProblemDefinition(
        name="akkt_example", n=2, p=0, m=2, horizon=1.0,
        eval_phi=lambda x, t: (t - 0.5) * x[0],
        eval_grad_phi=lambda x, t: np.array([t - 0.5, 0.0]),
        eval_h=lambda x, t: _E0,
        eval_jac_h=lambda x, t: _E2,
        eval_g=lambda x, t: np.array([-(t - 0.5) * x[0] ** 3 + x[1], -x[1]]),
        eval_jac_g=lambda x, t: np.array([
            [-3.0 * (t - 0.5) * x[0] ** 2, 1.0],
            [0.0, -1.0],
        ]),
        convexity=Convexity(phi_convex=True, g_convex=(False, True), h_affine=()),
        reference=lambda t: np.array([0.0, 0.0]),
    )


def _infeasible1() -> ProblemDefinition:
    # Empty feasible set: x^2 + 1 <= 0 never holds.  The squared-violation
    # integral has its unique stationary point at x = 0.
    return ProblemDefinition(
        name="infeasible1", n=1, p=0, m=1, horizon=1.0,
        eval_phi=lambda x, t: x[0] ** 2,
        eval_grad_phi=lambda x, t: np.array([2.0 * x[0]]),
        eval_h=lambda x, t: _E0,
        eval_jac_h=lambda x, t: np.zeros((0, 1)),
        eval_g=lambda x, t: np.array([x[0] ** 2 + 1.0]),
        eval_jac_g=lambda x, t: np.array([[2.0 * x[0]]]),
        convexity=Convexity(phi_convex=True, g_convex=(True,), h_affine=()),
    )


_REGISTRY = {
    "ex1": _ex1,
    "ex2": _ex2,
    "ex3": _ex3,
    "ex4": _ex4,
    "akkt_example": _akkt_example,
    "infeasible1": _infeasible1,
}


def builtin_names() -> tuple:
    return tuple(_REGISTRY)


def builtin(name: str) -> ProblemDefinition:
    """Look up a built-in problem by registry name."""
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise UnknownProblemError(
            f"unknown problem {name!r}; valid names: {', '.join(_REGISTRY)}"
        ) from None
    return factory()


def akkt_example_sequence(grid: TimeGrid, k: int, guard_halfwidth: float = 1e-3):
    """Closed-form primal/dual pair for `akkt_example` at sequence index k.

    Returns (x, v) trajectories with x1 = (t - 1/2)/k, x2 = 0 and both
    inequality multipliers equal to k^2 / (3 (t - 1/2)^2).  The multiplier
    blows up at t = 1/2, so grids with a node inside |t - 1/2| <
    guard_halfwidth are rejected.
    """
    if k < 1:
        raise ValueError("sequence index k must be >= 1")
    s = grid.nodes - 0.5
    if np.any(np.abs(s) < guard_halfwidth):
        raise ValueError(
            "grid has a node too close to t = 1/2 where the multiplier is unbounded; "
            "use an even node count"
        )
    x = np.column_stack([s / k, np.zeros(grid.num_nodes)])
    v1 = k * k / (3.0 * s * s)
    v = np.column_stack([v1, v1])
    return Trajectory(grid, x), Trajectory(grid, v)
