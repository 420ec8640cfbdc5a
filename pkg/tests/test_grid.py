"""Grid construction, quadrature, norms and trajectory CSV round-trips."""

import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ctpalm.grid import (TimeGrid, Trajectory, TrajectoryCsvError, l1_time_norm,
                         make_uniform_grid, read_trajectory_csv, sup_node_norm,
                         trapezoid_integral, write_trajectory_csv)


def traj_of(grid, fn):
    return Trajectory(grid, np.array([np.atleast_1d(fn(t)) for t in grid.nodes]))


def oracle_trapezoid(values, h):
    """Independent summation oracle: exact pairwise-term sum via fsum."""
    return math.fsum(h * (values[i] + values[i + 1]) / 2.0
                     for i in range(len(values) - 1))


# -- make_uniform_grid -------------------------------------------------------

def test_grid_85_nodes_unit_horizon():
    grid = make_uniform_grid(1.0, 85)
    assert grid.num_nodes == 85
    assert grid.spacing == pytest.approx(1.0 / 84.0, rel=1e-15)
    assert np.allclose(grid.nodes, [i / 84 for i in range(85)], rtol=0, atol=1e-16)


def test_grid_two_nodes_is_endpoints():
    grid = make_uniform_grid(1.0, 2)
    assert list(grid.nodes) == [0.0, 1.0]


def test_grid_five_nodes_horizon_two():
    grid = make_uniform_grid(2.0, 5)
    assert list(grid.nodes) == [0.0, 0.5, 1.0, 1.5, 2.0]


@pytest.mark.parametrize("horizon,nodes", [(0.0, 5), (-1.0, 5), (1.0, 1), (1.0, 0)])
def test_grid_rejects_bad_arguments(horizon, nodes):
    with pytest.raises(ValueError):
        make_uniform_grid(horizon, nodes)


def test_grid_rejects_nonuniform_nodes():
    with pytest.raises(ValueError):
        TimeGrid(horizon=1.0, nodes=np.array([0.0, 0.1, 1.0]))


def test_trajectory_rejects_nonfinite_and_bad_shape():
    grid = make_uniform_grid(1.0, 3)
    with pytest.raises(ValueError):
        Trajectory(grid, np.array([[0.0], [np.nan], [0.0]]))
    with pytest.raises(ValueError):
        Trajectory(grid, np.zeros((4, 1)))


# -- trapezoid_integral ------------------------------------------------------

def test_trapezoid_constant_one():
    for n in (2, 5, 85):
        grid = make_uniform_grid(1.0, n)
        assert trapezoid_integral(traj_of(grid, lambda t: 1.0)) == pytest.approx(1.0, rel=1e-15)


def test_trapezoid_exact_for_identity():
    for n in (2, 9, 85):
        grid = make_uniform_grid(1.0, n)
        assert trapezoid_integral(traj_of(grid, lambda t: t)) == pytest.approx(0.5, rel=1e-14)


def test_trapezoid_t_squared_85_nodes_matches_oracle():
    grid = make_uniform_grid(1.0, 85)
    values = [t * t for t in grid.nodes]
    expected = oracle_trapezoid(values, grid.spacing)
    h = 1.0 / 84.0
    assert expected == pytest.approx(1.0 / 3.0 + h * h / 6.0, rel=1e-12)
    assert expected == pytest.approx(0.3333570, abs=5e-8)
    got = trapezoid_integral(traj_of(grid, lambda t: t * t))
    assert got == pytest.approx(expected, rel=1e-12)


def test_trapezoid_requires_scalar_trajectory():
    grid = make_uniform_grid(1.0, 3)
    with pytest.raises(ValueError):
        trapezoid_integral(Trajectory(grid, np.zeros((3, 2))))


@given(st.integers(min_value=2, max_value=60), st.integers(min_value=0, max_value=2**31))
@settings(max_examples=40, deadline=None)
def test_trapezoid_linearity(n, seed):
    rng = np.random.default_rng(seed)
    grid = make_uniform_grid(1.0, n)
    f = rng.normal(size=n)
    g = rng.normal(size=n)
    a, b = rng.normal(size=2)
    lhs = trapezoid_integral(Trajectory(grid, a * f + b * g))
    rhs = (a * trapezoid_integral(Trajectory(grid, f))
           + b * trapezoid_integral(Trajectory(grid, g)))
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


@given(st.integers(min_value=2, max_value=200),
       st.floats(min_value=-5, max_value=5),
       st.floats(min_value=-5, max_value=5))
@settings(max_examples=40, deadline=None)
def test_trapezoid_exact_for_affine(n, a, b):
    grid = make_uniform_grid(2.0, n)
    got = trapezoid_integral(traj_of(grid, lambda t: a * t + b))
    exact = a * 2.0 + 2.0 * b  # integral of a t + b over [0, 2]
    assert got == pytest.approx(exact, rel=1e-12, abs=1e-12)


# -- l1_time_norm ------------------------------------------------------------

def test_l1_norm_zero_trajectory():
    grid = make_uniform_grid(1.0, 11)
    assert l1_time_norm(Trajectory(grid, np.zeros((11, 3)))) == 0.0


def test_l1_norm_constant_scalar_on_horizon_two():
    grid = make_uniform_grid(2.0, 21)
    assert l1_time_norm(traj_of(grid, lambda t: 1.0)) == pytest.approx(2.0, rel=1e-14)


def test_l1_norm_signed_pair():
    grid = make_uniform_grid(1.0, 85)
    traj = traj_of(grid, lambda t: np.array([t, -t]))
    assert l1_time_norm(traj) == pytest.approx(1.0, rel=1e-14)


@given(st.integers(min_value=2, max_value=40), st.integers(min_value=1, max_value=3),
       st.integers(min_value=0, max_value=2**31))
@settings(max_examples=40, deadline=None)
def test_l1_norm_nonnegative_and_zero_iff_zero(n, dim, seed):
    rng = np.random.default_rng(seed)
    vals = rng.normal(size=(n, dim))
    grid = make_uniform_grid(1.0, n)
    norm = l1_time_norm(Trajectory(grid, vals))
    assert norm >= 0.0
    assert (norm == 0.0) == bool(np.all(vals == 0.0))


# -- sup_node_norm -----------------------------------------------------------

def test_sup_norm_zero():
    grid = make_uniform_grid(1.0, 4)
    assert sup_node_norm(Trajectory(grid, np.zeros((4, 2)))) == 0.0


def test_sup_norm_centered_identity():
    grid = make_uniform_grid(1.0, 85)
    assert sup_node_norm(traj_of(grid, lambda t: t - 0.5)) == pytest.approx(0.5)


def test_sup_norm_single_spike():
    grid = make_uniform_grid(1.0, 5)
    vals = np.zeros((5, 2))
    vals[3, 1] = 3.2
    assert sup_node_norm(Trajectory(grid, vals)) == 3.2


def test_sup_norm_empty_dim_is_zero():
    grid = make_uniform_grid(1.0, 4)
    assert sup_node_norm(Trajectory(grid, np.zeros((4, 0)))) == 0.0


@given(st.integers(min_value=2, max_value=30), st.integers(min_value=0, max_value=2**31))
@settings(max_examples=40, deadline=None)
def test_sup_norm_triangle_inequality(n, seed):
    rng = np.random.default_rng(seed)
    grid = make_uniform_grid(1.0, n)
    a = rng.normal(size=(n, 2))
    b = rng.normal(size=(n, 2))
    lhs = sup_node_norm(Trajectory(grid, a + b))
    rhs = sup_node_norm(Trajectory(grid, a)) + sup_node_norm(Trajectory(grid, b))
    assert lhs <= rhs + 1e-15


# -- CSV serialization -------------------------------------------------------

def test_csv_round_trip_is_bit_exact():
    grid = make_uniform_grid(1.0, 17)
    rng = np.random.default_rng(7)
    traj = Trajectory(grid, rng.normal(size=(17, 3)))
    buf = io.StringIO()
    write_trajectory_csv(traj, buf)
    text = buf.getvalue()
    assert text.splitlines()[0] == "t,c0,c1,c2"
    assert text.endswith("\n")
    back = read_trajectory_csv(io.StringIO(text))
    assert np.array_equal(back.values, traj.values)
    assert np.array_equal(back.grid.nodes, grid.nodes)


def test_csv_rejects_empty_file():
    with pytest.raises(TrajectoryCsvError) as err:
        read_trajectory_csv(io.StringIO(""))
    assert err.value.line == 1


def test_csv_reports_offending_line():
    text = "t,c0\n0,1.0\n0.5,oops\n1,3.0\n"
    with pytest.raises(TrajectoryCsvError) as err:
        read_trajectory_csv(io.StringIO(text))
    assert err.value.line == 3


def test_csv_rejects_column_mismatch():
    text = "t,c0\n0,1.0\n0.5,1.0,2.0\n1,3.0\n"
    with pytest.raises(TrajectoryCsvError) as err:
        read_trajectory_csv(io.StringIO(text))
    assert err.value.line == 3
