"""Command-line interface: verbs, exit codes, file outputs, and data checks."""

import json
import os

import numpy as np
import pytest

import ctpalm as c
from ctpalm.grid import write_trajectory_csv
from ctpalm.problems import akkt_example_sequence, builtin
from conftest import run_cli


# -- list-problems -------------------------------------------------------------

def test_list_problems_table():
    proc = run_cli(["list-problems"])
    assert proc.returncode == 0
    lines = proc.stdout.strip().splitlines()
    assert len(lines) == 6
    assert "ex3  n=3 p=1 m=2 T=1 ref=yes" in lines
    assert any(line.startswith("infeasible1") for line in lines)
    assert any("ref=no" in line for line in lines)


# -- solve ----------------------------------------------------------------------

def test_solve_ex1_writes_everything(ex1_cli_dirs):
    out = ex1_cli_dirs[0]
    for name in ("iterations.csv", "trajectory.csv", "summary.json",
                 "trajectory.svg", "residuals.svg"):
        assert (out / name).exists(), name
    summary = json.loads((out / "summary.json").read_text())
    assert summary["status"] == "AkktConverged"
    assert summary["error_metrics"]["sup_error"] <= 1e-3
    assert summary["config"]["nodes"] == 85

    header = (out / "trajectory.csv").read_text().splitlines()[0]
    assert header == "t,x1,x2,v1,v2"
    it_header = (out / "iterations.csv").read_text().splitlines()[0]
    assert it_header.split(",") == ["k", "rho", "stationarity_l1",
                                    "complementarity_sup", "infeas_measure",
                                    "objective", "inner_status", "inner_max_grad"]
    svg = (out / "trajectory.svg").read_text()
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")


def test_summary_round_trips_to_identical_bytes(ex1_cli_dirs):
    raw = (ex1_cli_dirs[0] / "summary.json").read_bytes()
    data = json.loads(raw)
    again = (json.dumps(data, indent=2, sort_keys=True, allow_nan=False)
             + "\n").encode("utf-8")
    assert again == raw


def test_repeated_runs_are_bit_identical(ex1_cli_dirs):
    a, b = ex1_cli_dirs
    for name in ("iterations.csv", "trajectory.csv", "summary.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_solve_unknown_problem_is_usage_error(tmp_path):
    proc = run_cli(["solve", "--problem", "nosuch", "--out-dir", str(tmp_path)])
    assert proc.returncode == 64
    for name in ("ex1", "ex2", "ex3", "ex4", "akkt_example", "infeasible1"):
        assert name in proc.stderr
    assert not any(tmp_path.iterdir())


def test_solve_dimension_mismatch_names_flag(tmp_path):
    proc = run_cli(["solve", "--problem", "ex1", "--x0", "1,1,1",
                    "--out-dir", str(tmp_path)])
    assert proc.returncode == 65
    assert "--x0" in proc.stderr
    assert not any(tmp_path.iterdir())


def test_solve_bad_flag_value_is_usage_error(tmp_path):
    proc = run_cli(["solve", "--problem", "ex1", "--nodes", "many",
                    "--out-dir", str(tmp_path)])
    assert proc.returncode == 64


def test_solve_atomic_outputs_no_temp_leftovers(ex1_cli_dirs):
    leftovers = [p for p in os.listdir(ex1_cli_dirs[0]) if p.startswith(".tmp.")]
    assert leftovers == []


def test_config_file_supplies_defaults_and_flags_win(tmp_path):
    cfg_path = tmp_path / "run.json"
    cfg_path.write_text(json.dumps({"nodes": 21, "x0": "1,1", "v0": "1,1",
                                    "max_outer": 7}))
    out = tmp_path / "out"
    proc = run_cli(["solve", "--problem", "ex1", "--config", str(cfg_path),
                    "--max-outer", "300", "--out-dir", str(out)])
    assert proc.returncode == 0, proc.stderr
    summary = json.loads((out / "summary.json").read_text())
    assert summary["config"]["nodes"] == 21       # from the file
    assert summary["config"]["max_outer"] == 300  # flag overrides file


def test_solve_exit_code_for_iteration_limit(tmp_path):
    out = tmp_path / "out"
    proc = run_cli(["solve", "--problem", "infeasible1", "--x0", "5",
                    "--max-outer", "25", "--out-dir", str(out)])
    assert proc.returncode == 2
    summary = json.loads((out / "summary.json").read_text())
    assert summary["status"] == "MaxOuterReached"
    cert = summary["certificates"]["infeasibility"]
    assert cert["kind"] == "InfeasibleButThetaStationary"


# -- check -----------------------------------------------------------------------

def _write_csvs(tmp_path, grid, x, mults):
    x_path = tmp_path / "x.csv"
    m_path = tmp_path / "mult.csv"
    with open(x_path, "w") as fh:
        write_trajectory_csv(x, fh)
    with open(m_path, "w") as fh:
        write_trajectory_csv(mults, fh)
    return str(x_path), str(m_path)


def test_check_asymptotic_fixture_fails_tolerance(tmp_path):
    grid = c.make_uniform_grid(1.0, 84)
    x, v = akkt_example_sequence(grid, k=100)
    x_path, m_path = _write_csvs(tmp_path, grid, x, v)
    proc = run_cli(["check", "akkt_example", x_path, m_path])
    assert proc.returncode == 1  # complementarity ~8.3e-4 exceeds 1e-5
    data = json.loads(proc.stdout)
    assert data["residuals"]["stationarity_l1"] <= 1e-12
    assert data["residuals"]["complementarity_sup"] == pytest.approx(
        0.25 / 300.0, rel=1e-12)
    assert data["pass"] is False


def test_check_reference_with_valid_multipliers_passes(tmp_path):
    prob = builtin("ex1")
    grid = c.make_uniform_grid(1.0, 85)
    x = c.Trajectory.constant(grid, [0.0, 0.0])
    v = c.Trajectory.constant(grid, [0.5, 0.5])
    x_path, m_path = _write_csvs(tmp_path, grid, x, v)
    proc = run_cli(["check", "ex1", x_path, m_path])
    assert proc.returncode == 0, proc.stdout + proc.stderr
    data = json.loads(proc.stdout)
    assert data["pass"] is True
    assert data["residuals"]["stationarity_l1"] == 0.0
    assert data["feasibility"]["max_inequality_violation"] == 0.0


def test_check_empty_trajectory_file(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    other = tmp_path / "m.csv"
    other.write_text("t,c0\n0,0\n1,0\n")
    proc = run_cli(["check", "ex1", str(empty), str(other)])
    assert proc.returncode == 65


def test_check_malformed_csv_reports_line(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("t,c0,c1\n0,0,0\n0.5,zap,0\n1,0,0\n")
    mult = tmp_path / "m.csv"
    mult.write_text("t,c0,c1\n0,0,0\n0.5,0,0\n1,0,0\n")
    proc = run_cli(["check", "ex1", str(bad), str(mult)])
    assert proc.returncode == 65
    assert "line 3" in proc.stderr


def test_check_dimension_mismatch(tmp_path):
    grid = c.make_uniform_grid(1.0, 5)
    x = c.Trajectory.constant(grid, [0.0])          # ex1 needs 2 state columns
    v = c.Trajectory.constant(grid, [0.5, 0.5])
    x_path, m_path = _write_csvs(tmp_path, grid, x, v)
    proc = run_cli(["check", "ex1", x_path, m_path])
    assert proc.returncode == 65


def test_check_rejects_negative_multipliers(tmp_path):
    grid = c.make_uniform_grid(1.0, 5)
    x = c.Trajectory.constant(grid, [0.0, 0.0])
    v = c.Trajectory.constant(grid, [0.5, -0.5])
    x_path, m_path = _write_csvs(tmp_path, grid, x, v)
    proc = run_cli(["check", "ex1", x_path, m_path])
    assert proc.returncode == 65


def test_solve_ex4_certificate_through_cli(tmp_path):
    out = tmp_path / "out"
    proc = run_cli(["solve", "--problem", "ex4", "--nodes", "85",
                    "--x0", "1,1", "--v0", "1,1,1,1,1", "--out-dir", str(out)])
    assert proc.returncode == 0, proc.stderr
    summary = json.loads((out / "summary.json").read_text())
    cert = summary["certificates"]["sufficiency"]
    assert cert["kind"] == "GlobalOptimalByConvexity"
    assert summary["error_metrics"]["masked_nodes"] == [42]


def test_solve_wrong_multiplier_count_for_ex4(tmp_path):
    proc = run_cli(["solve", "--problem", "ex4", "--x0", "1,1",
                    "--v0", "1,1,1,1", "--out-dir", str(tmp_path)])
    assert proc.returncode == 65
    assert "--v0" in proc.stderr


def test_solve_accepts_csv_initial_state(tmp_path):
    grid = c.make_uniform_grid(1.0, 21)
    x0 = c.Trajectory(grid, np.array([[0.0, t] for t in grid.nodes]))
    path = tmp_path / "x0.csv"
    with open(path, "w") as fh:
        write_trajectory_csv(x0, fh)
    out = tmp_path / "out"
    proc = run_cli(["solve", "--problem", "ex2", "--nodes", "21",
                    "--x0", str(path), "--v0", "0.25,0.25,0",
                    "--out-dir", str(out)])
    assert proc.returncode == 0, proc.stderr
    summary = json.loads((out / "summary.json").read_text())
    assert summary["error_metrics"]["sup_error"] <= 1e-2


def test_svg_outputs_are_well_formed_xml(ex1_cli_dirs):
    import xml.etree.ElementTree as ET
    for name in ("trajectory.svg", "residuals.svg"):
        root = ET.fromstring((ex1_cli_dirs[0] / name).read_text())
        assert root.tag.endswith("svg")
        assert len(list(root.iter())) > 10
