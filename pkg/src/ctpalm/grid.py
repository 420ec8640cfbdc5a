"""Uniform time grids, node-sampled trajectories, quadrature and norms.

Everything downstream (problem evaluation, the solver, diagnostics) works on
trajectories sampled at the nodes of a uniform grid on [0, T].  All reductions
run in ascending node order so repeated runs are bit-identical.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

# Relative slack allowed on node spacing before a grid is rejected as non-uniform.
_UNIFORMITY_RTOL = 1e-15


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class TimeGrid:
    """Uniform node set t_0 = 0 < t_1 < ... < t_{N-1} = T."""

    horizon: float
    nodes: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "nodes", _readonly(self.nodes))
        n = self.nodes.size
        if self.horizon <= 0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        if n < 2:
            raise ValueError(f"grid needs at least 2 nodes, got {n}")
        if self.nodes[0] != 0.0 or self.nodes[-1] != self.horizon:
            raise ValueError("grid must start at 0 and end at the horizon")
        h = self.horizon / (n - 1)
        gaps = np.diff(self.nodes)
        if np.any(np.abs(gaps - h) > _UNIFORMITY_RTOL * self.horizon):
            raise ValueError("grid nodes are not uniformly spaced")

    @property
    def num_nodes(self) -> int:
        return self.nodes.size

    @property
    def spacing(self) -> float:
        return self.horizon / (self.nodes.size - 1)

    def same_as(self, other: "TimeGrid") -> bool:
        return self is other or (
            self.horizon == other.horizon and np.array_equal(self.nodes, other.nodes)
        )


def make_uniform_grid(horizon: float, num_nodes: int) -> TimeGrid:
    """Grid with nodes t_i = i * horizon / (num_nodes - 1)."""
    if horizon <= 0:
        raise ValueError(f"horizon must be positive, got {horizon}")
    if num_nodes < 2:
        raise ValueError(f"num_nodes must be >= 2, got {num_nodes}")
    nodes = np.array([i * horizon / (num_nodes - 1) for i in range(num_nodes)])
    # Guard against rounding at the right endpoint.
    nodes[-1] = horizon
    return TimeGrid(horizon=float(horizon), nodes=nodes)


@dataclass(frozen=True)
class Trajectory:
    """Per-node samples of a vector function of time: values[i] ~ f(t_i)."""

    grid: TimeGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.ndim == 1:
            vals = vals.reshape(-1, 1)
        if vals.ndim != 2 or vals.shape[0] != self.grid.num_nodes:
            raise ValueError(
                f"values must be (num_nodes, dim), got {vals.shape} for "
                f"{self.grid.num_nodes} nodes"
            )
        if vals.size and not np.all(np.isfinite(vals)):
            raise ValueError("trajectory contains non-finite entries")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @staticmethod
    def constant(grid: TimeGrid, value) -> "Trajectory":
        row = np.atleast_1d(np.asarray(value, dtype=float))
        return Trajectory(grid, np.tile(row, (grid.num_nodes, 1)))


def _trapezoid_sum(samples: np.ndarray, h: float) -> float:
    """Composite trapezoid over per-node scalars, accumulated in ascending order."""
    total = 0.0
    for i in range(samples.size - 1):
        total += h * (samples[i] + samples[i + 1]) / 2.0
    return float(total)


def trapezoid_integral(samples: Trajectory) -> float:
    """Composite trapezoid value of a scalar trajectory."""
    if samples.dim != 1:
        raise ValueError(f"trapezoid_integral expects dim=1, got dim={samples.dim}")
    return _trapezoid_sum(samples.values[:, 0], samples.grid.spacing)


def l1_time_norm(v: Trajectory) -> float:
    """Trapezoid quadrature of t -> sum_d |v(t)_d|."""
    if v.dim == 0:
        return 0.0
    return _trapezoid_sum(np.abs(v.values).sum(axis=1), v.grid.spacing)


def sup_node_norm(v: Trajectory) -> float:
    """Largest absolute entry over all nodes and components (0 for empty dim)."""
    if v.values.size == 0:
        return 0.0
    return float(np.abs(v.values).max())


def write_trajectory_csv(traj: Trajectory, dest) -> None:
    """Write `t,c0,c1,...` rows at full double precision.

    `dest` is a path or a writable text file.  One data row per node,
    newline-terminated.
    """
    header = "t," + ",".join(f"c{d}" for d in range(traj.dim))
    lines = [header]
    for i, t in enumerate(traj.grid.nodes):
        cells = [f"{t:.17g}"] + [f"{x:.17g}" for x in traj.values[i]]
        lines.append(",".join(cells))
    text = "\n".join(lines) + "\n"
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        with open(dest, "w", encoding="utf-8") as fh:
            fh.write(text)


class TrajectoryCsvError(ValueError):
    """Malformed trajectory CSV; carries the 1-based offending line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


def read_trajectory_csv(src) -> Trajectory:
    """Parse a `t,c0,c1,...` CSV back into a trajectory on a uniform grid."""
    if hasattr(src, "read"):
        text = src.read()
    else:
        with open(src, "r", encoding="utf-8") as fh:
            text = fh.read()
    lines = [ln for ln in io.StringIO(text).read().splitlines()]
    if not lines:
        raise TrajectoryCsvError("empty file", 1)
    header = [c.strip() for c in lines[0].split(",")]
    if not header or header[0] != "t":
        raise TrajectoryCsvError("header must start with 't'", 1)
    dim = len(header) - 1
    ts, rows = [], []
    for lineno, ln in enumerate(lines[1:], start=2):
        if not ln.strip():
            continue
        cells = ln.split(",")
        if len(cells) != dim + 1:
            raise TrajectoryCsvError(
                f"expected {dim + 1} columns, got {len(cells)}", lineno
            )
        try:
            vals = [float(c) for c in cells]
        except ValueError:
            raise TrajectoryCsvError("non-numeric cell", lineno) from None
        ts.append(vals[0])
        rows.append(vals[1:])
    if len(ts) < 2:
        raise TrajectoryCsvError("need at least 2 data rows", len(lines))
    horizon = ts[-1]
    if horizon <= 0 or ts[0] != 0.0:
        raise TrajectoryCsvError("time column must run from 0 to a positive horizon", 2)
    n = len(ts)
    canonical = [i * horizon / (n - 1) for i in range(n)]
    tol = 1e-12 * max(1.0, horizon)
    for i, (got, want) in enumerate(zip(ts, canonical)):
        if abs(got - want) > tol:
            raise TrajectoryCsvError(
                f"time column is not a uniform grid (t={got!r})", i + 2
            )
    grid = make_uniform_grid(horizon, n)
    return Trajectory(grid, np.array(rows))
