import logging

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hjpdhg.grid import SpaceTimeGrid1D, SpaceTimeGrid2D
from hjpdhg.hamiltonian import HomogeneousData
from hjpdhg.homogeneous import (
    lagrangian,
    m_update,
    m_update_1d,
    m_update_2d,
    rho_candidates,
    rho_objective,
    rho_update,
    rho_update_1d,
    rho_update_2d,
    solve_1d_homogeneous,
    solve_2d_homogeneous,
    solve_homogeneous,
)
from hjpdhg.pdhg import SolverConfig, solve_windowed

logging.getLogger("hjpdhg").setLevel(logging.ERROR)

Y = np.arange(0.0, 10.0 + 5e-5, 1e-4)


def grid_oracle(alpha, gs, ws):
    """Dense evaluation of the multiplier objective on ``Y`` (rows = draws)."""
    vals = rho_objective(Y[None, :], alpha[:, None], [g[:, None] for g in gs], [w[:, None] for w in ws])
    return vals.min(axis=1)


def random_draws(rng, n, pairs):
    alpha = rng.uniform(-3, 5, n)
    gs = [rng.uniform(0.5, 2.0, n) for _ in range(pairs)]
    ws = [rng.uniform(-4, 4, n) for _ in range(pairs)]
    return alpha, gs, ws


def test_no_active_constraint_gives_positive_part():
    assert rho_update_1d(1.7, 0.5, -0.2, 1.0) == 1.7
    assert rho_update_1d(-1.0, 0.5, -0.2, 1.0) == 0.0
    assert rho_update_2d(0.8, 0.1, -0.1, 0.3, -0.4, 1.5) == 0.8


def test_single_active_branch_closed_form():
    # z_i < 0: (y - a)^2 + (g y + z)^2 is active for y < -z/g
    a, z, g = 0.2, -2.0, 1.0
    y = rho_update_1d(a, z, 0.0, g)
    assert y == pytest.approx((a - g * z) / (1 + g * g))


def test_candidate_count():
    assert rho_candidates(0.0, [1.0, 1.0], [0.0, 0.0]).shape[0] == 1 + 2 + 4
    assert rho_candidates(0.0, [1.0] * 4, [0.0] * 4).shape[0] == 1 + 4 + 16


@pytest.mark.parametrize("pairs", [2, 4])
def test_rho_update_matches_dense_grid(rng, pairs):
    alpha, gs, ws = random_draws(rng, 400, pairs)
    got = rho_update(alpha, gs, ws)
    val = rho_objective(got, alpha, gs, ws)
    assert np.all(got >= 0)
    assert np.all(np.abs(val - grid_oracle(alpha, gs, ws)) <= 1e-6)


@given(st.floats(-5, 5), st.floats(-4, 4), st.floats(-4, 4), st.floats(0.1, 3), st.floats(0.1, 3))
def test_rho_update_no_worse_than_any_candidate(a, w1, w2, g1, g2):
    cands = rho_candidates(a, [g1, g2], [w1, -w2])
    best = rho_update_1d(a, w1, w2, g1, g2)
    vals = rho_objective(cands, a, [g1, g2], [w1, -w2])
    assert rho_objective(best, a, [g1, g2], [w1, -w2]) <= vals.min() + 1e-12


def test_ties_resolve_to_smallest():
    # alpha = 0 and no active pair: every candidate is 0 anyway
    assert rho_update(0.0, [1.0, 1.0], [1.0, 1.0]) == 0.0


def test_m_update_examples():
    assert m_update_1d(0.1, 1.0, 1.0, 1.0, 1.0) == 0.1
    assert m_update_1d(0.3, 1.0, 0.2, 1.0, 1.0) == 0.2
    assert m_update_1d(-0.5, 0.3, 1.0, 1.0, 1.0) == pytest.approx(-0.3)
    assert m_update_2d is m_update_1d


def test_array_m_update_uses_right_neighbour():
    rho = np.array([[1.0, 2.0, 3.0]])
    gamma = np.ones_like(rho)
    z = np.array([[10.0, 10.0, -10.0]])
    np.testing.assert_array_equal(m_update(z, rho, gamma, 1), [[2.0, 3.0, -3.0]])


def test_stationary_problem_converges_immediately():
    g = SpaceTimeGrid1D(0, 2, 10, 1.0, 5)
    phi, _, rep = solve_1d_homogeneous(g, HomogeneousData(1), lambda x: 0 * x + 2.0, SolverConfig())
    assert rep.converged and rep.outer_iterations == 1
    g2 = SpaceTimeGrid2D(0, 2, 0, 2, 6, 6, 1.0, 3)
    _, _, rep = solve_2d_homogeneous(g2, HomogeneousData(2), lambda x, y: 0 * (x + y), SolverConfig())
    assert rep.converged


def _feasible(dual, gamma, ndim):
    for a in range(ndim):
        upper = np.roll(dual.rho * gamma, -1, axis=a + 1)
        lower = -dual.rho * gamma
        if not (np.all(dual.m[a] <= upper) and np.all(dual.m[a] >= lower)):
            return False
    return bool(np.all(dual.rho >= 0))


@pytest.mark.parametrize("ndim", [1, 2])
def test_feasibility_after_every_iteration(ndim):
    if ndim == 1:
        grid, g = SpaceTimeGrid1D(0, 2, 16, 1.0, 5), lambda x: np.sin(np.pi * x)
    else:
        grid, g = SpaceTimeGrid2D(0, 2, 0, 2, 8, 8, 1.0, 3), lambda x, y: np.sin(np.pi * x) + np.cos(np.pi * y)
    speed = 1.5
    data = HomogeneousData(ndim, gamma=speed)
    flags = []
    solve_homogeneous(grid, data, g, SolverConfig(n_outer=150),
                      lambda it, phi, d: flags.append(_feasible(d, speed, ndim)))
    assert len(flags) == 150 and all(flags)


def test_lagrangian_differences_settle():
    grid = SpaceTimeGrid1D(0, 2, 20, 0.2, 3)
    data = HomogeneousData(1)
    vals = []
    _, _, rep = solve_homogeneous(grid, data, lambda x: np.sin(np.pi * x),
                                  SolverConfig(step_ratio=1e-4, n_outer=20000),
                                  lambda it, phi, d: vals.append(lagrangian(phi, d.rho, d.m, grid, data)))
    assert rep.converged
    assert np.all(np.abs(np.diff(vals[-5:])) < 1e-8)


def test_equivalent_to_general_solver_small():
    from hjpdhg.hamiltonian import l1_eo
    grid = SpaceTimeGrid1D(0, 2, 10, 1.0, 6)
    g = lambda x: np.sin(np.pi * x)
    a, ra = solve_windowed(grid, HomogeneousData(1), g, SolverConfig(time_windows=5, step_ratio=1e-4))
    b, rb = solve_windowed(grid, l1_eo(), g, SolverConfig(time_windows=5, step_ratio=1e-3))
    assert all(r.converged for r in ra + rb)
    assert np.mean(np.abs(a - b)) <= 1e-3


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        solve_homogeneous(SpaceTimeGrid1D(0, 2, 4, 1.0, 3), HomogeneousData(2), 0.0, SolverConfig())
    with pytest.raises(ValueError):
        solve_2d_homogeneous(SpaceTimeGrid1D(0, 2, 4, 1.0, 3), HomogeneousData(1), 0.0, SolverConfig())
