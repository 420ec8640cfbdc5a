"""Shared fixtures: the benchmark solves are expensive, so each one runs once
per session and every test that needs it reuses the report."""

from __future__ import annotations

import subprocess
import sys

import numpy as np
import pytest

import ctpalm as c


def unconstrained_quadratic():
    """Tiny constraint-free fixture: phi = x^2 on [0, 1]."""
    return c.ProblemDefinition(
        name="quad", n=1, p=0, m=0, horizon=1.0,
        eval_phi=lambda x, t: x[0] ** 2,
        eval_grad_phi=lambda x, t: np.array([2.0 * x[0]]),
        eval_h=lambda x, t: np.zeros(0),
        eval_jac_h=lambda x, t: np.zeros((0, 1)),
        eval_g=lambda x, t: np.zeros(0),
        eval_jac_g=lambda x, t: np.zeros((0, 1)),
        convexity=c.Convexity(True, (), ()))


def run_builtin(name, x0, u0=None, v0=None, nodes=85, **cfg_kwargs):
    problem = c.builtin(name)
    grid = c.make_uniform_grid(problem.horizon, nodes)
    cfg = c.AlmConfig(**cfg_kwargs)
    report = c.solve(
        problem, cfg,
        c.Trajectory.constant(grid, x0),
        c.Trajectory.constant(grid, u0) if u0 is not None else None,
        c.Trajectory.constant(grid, v0) if v0 is not None else None)
    return report, problem, cfg


@pytest.fixture(scope="session")
def ex1_run():
    return run_builtin("ex1", [1.0, 1.0], v0=[1.0, 1.0])


@pytest.fixture(scope="session")
def ex2_run():
    return run_builtin("ex2", [0.5, 0.5], v0=[1.0, 1.0, 1.0])


@pytest.fixture(scope="session")
def ex3_run():
    return run_builtin("ex3", [-100.0, -100.0, -100.0], u0=[1.0], v0=[1.0, 1.0])


@pytest.fixture(scope="session")
def ex4_run():
    return run_builtin("ex4", [1.0, 1.0], v0=[1.0, 1.0, 1.0, 1.0, 1.0])


@pytest.fixture(scope="session")
def infeasible1_run():
    return run_builtin("infeasible1", [5.0])


def run_cli(args, cwd=None):
    return subprocess.run([sys.executable, "-m", "ctpalm"] + list(args),
                          capture_output=True, text=True, cwd=cwd)


@pytest.fixture(scope="session")
def ex1_cli_dirs(tmp_path_factory):
    """The reference command-line run, executed twice for determinism checks."""
    dirs = []
    for tag in ("a", "b"):
        out = tmp_path_factory.mktemp(f"ex1-cli-{tag}")
        proc = run_cli(["solve", "--problem", "ex1", "--nodes", "85",
                        "--x0", "1,1", "--v0", "1,1", "--out-dir", str(out)])
        assert proc.returncode == 0, proc.stderr
        dirs.append(out)
    return dirs
