"""Independent oracles for the test suite: finite differences and brute force.

These are deliberately naive so they cannot share a failure mode with the
analytic gradients and the node optimizer they are used to validate.  They
ship with the package (the test suite imports them) but are not part of the
solver API.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class FdConfig:
    step: float = 1e-6
    scheme: str = "central"

    def __post_init__(self):
        if self.step <= 0:
            raise ValueError("step must be positive")
        if self.scheme != "central":
            raise ValueError(f"unsupported scheme {self.scheme!r}")


def fd_gradient(f, x: np.ndarray, cfg: FdConfig = FdConfig()) -> np.ndarray:
    """Central-difference gradient (f(x + h e_i) - f(x - h e_i)) / (2 h)."""
    x = np.asarray(x, dtype=float)
    out = np.empty(x.size)
    for i in range(x.size):
        e = np.zeros(x.size)
        e[i] = cfg.step
        fp = float(f(x + e))
        fm = float(f(x - e))
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise ValueError(f"function non-finite near x={x!r} (component {i})")
        out[i] = (fp - fm) / (2.0 * cfg.step)
    return out


def dense_grid_min(f, box_center: np.ndarray, radius: float, points_per_axis: int):
    """Exhaustive minimum of f over a cubic lattice; ties keep the first hit.

    Iteration runs in row-major index order, so the tie-break is the
    lexicographically smallest index tuple.  Only meant for n <= 3.
    """
    center = np.atleast_1d(np.asarray(box_center, dtype=float))
    n = center.size
    if n > 3:
        raise ValueError("dense_grid_min is an oracle for n <= 3 only")
    if points_per_axis < 3:
        raise ValueError("points_per_axis must be >= 3")
    if radius <= 0:
        raise ValueError("radius must be positive")
    axes = [
        np.array([center[d] - radius + 2.0 * radius * k / (points_per_axis - 1)
                  for k in range(points_per_axis)])
        for d in range(n)
    ]
    best_x = None
    best_f = np.inf
    for idx in itertools.product(range(points_per_axis), repeat=n):
        x = np.array([axes[d][idx[d]] for d in range(n)])
        val = float(f(x))
        if val < best_f:
            best_f = val
            best_x = x
    return best_x, best_f
