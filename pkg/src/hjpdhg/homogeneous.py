"""PDHG without an inner loop for ``H(x, t, p) = gamma(x, t) |p|_1 + f(x, t)``.

Written in momentum variables ``m = rho * v`` (one per axis), the dual
update for such Hamiltonians is a projection onto the cone

    -rho[i] gamma[i] <= m[i] <= rho[i+1] gamma[i+1]

and can be done in closed form.  For fixed ``rho`` the optimal momentum is a
clamp of ``z = m_old + sigma D^+ phi_bar``.  Eliminating ``m`` leaves, at each
point, the one-dimensional convex problem

    min_{y >= 0} (y - alpha)^2 + sum_pairs min(g y + w, 0)^2

with one pair ``(gamma[i], z[i])`` for the lower bound of ``m[i]`` and one pair
``(gamma[i], -z[i-1])`` for the upper bound of ``m[i-1]``, per axis.  The
minimiser is the best of a finite candidate set: ``0``, the breakpoints
``-w/g`` and the stationary point of every subset of active pairs.
"""
from __future__ import annotations

import itertools
import logging
import time
from typing import Callable, List, Optional, Sequence

import numpy as np

from .grid import d_minus, d_plus, d_t_minus, d_t_plus_rho, laplacian
from .hamiltonian import HomogeneousData
from .pdhg import (
    DIVERGENCE_LIMIT,
    DivergenceError,
    DualState,
    SolveReport,
    SolverConfig,
    _check_finite,
    _initial_slice,
    _slopes,
    _space_time_coords,
    residual_sum,
)
from .poisson import PoissonPlan

__all__ = [
    "rho_objective",
    "rho_candidates",
    "rho_update",
    "rho_update_1d",
    "rho_update_2d",
    "m_update",
    "m_update_1d",
    "m_update_2d",
    "lagrangian",
    "solve_homogeneous",
    "solve_1d_homogeneous",
    "solve_2d_homogeneous",
]

logger = logging.getLogger(__name__)


def rho_objective(y, alpha, gs: Sequence, ws: Sequence):
    """``(y - alpha)^2 + sum_j min(g_j y + w_j, 0)^2``, broadcasting."""
    out = (y - alpha) ** 2
    for g, w in zip(gs, ws):
        out = out + np.minimum(g * y + w, 0.0) ** 2
    return out


def rho_candidates(alpha, gs: Sequence, ws: Sequence) -> np.ndarray:
    """Stack of candidate minimisers along a new leading axis.

    Contains ``0``, the clipped breakpoints and the clipped stationary point
    of every subset of pairs (``2 + 2n + ... `` entries, 7 for two pairs and
    21 for four).
    """
    alpha = np.asarray(alpha, dtype=float)
    gs = [np.asarray(g, dtype=float) for g in gs]
    ws = [np.asarray(w, dtype=float) for w in ws]
    shape = np.broadcast_shapes(alpha.shape, *(g.shape for g in gs), *(w.shape for w in ws))
    cands = [np.zeros(shape)]
    for g, w in zip(gs, ws):
        cands.append(np.broadcast_to(np.maximum(-w / g, 0.0), shape))
    n = len(gs)
    for r in range(n + 1):
        for subset in itertools.combinations(range(n), r):
            num = alpha
            den = 1.0
            for j in subset:
                num = num - gs[j] * ws[j]
                den = den + gs[j] ** 2
            cands.append(np.broadcast_to(np.maximum(num / den, 0.0), shape))
    return np.stack(cands)


def rho_update(alpha, gs: Sequence, ws: Sequence) -> np.ndarray:
    """Exact minimiser of :func:`rho_objective` over ``y >= 0``.

    Ties between candidates go to the smallest ``y``.
    """
    cands = rho_candidates(alpha, gs, ws)
    vals = rho_objective(cands, alpha, gs, ws)
    best = vals.min(axis=0)
    # smallest candidate whose value attains the minimum
    tied = np.where(vals <= best, cands, np.inf)
    return tied.min(axis=0)


def rho_update_1d(alpha, z_i, z_im1, gamma_i, gamma_up=None):
    """Pointwise multiplier update in 1D.

    ``gamma_i`` bounds ``m[i]`` from below and ``gamma_up`` (the speed at the
    same point ``x_i``) bounds ``m[i-1]`` from above; it defaults to
    ``gamma_i``.
    """
    gamma_up = gamma_i if gamma_up is None else gamma_up
    out = rho_update(alpha, (gamma_i, gamma_up), (z_i, -np.asarray(z_im1)))
    return float(out) if np.ndim(out) == 0 else out


def rho_update_2d(alpha, z1_i, z1_im1, z2_j, z2_jm1, gamma):
    """Pointwise multiplier update in 2D with four constraint pairs."""
    out = rho_update(alpha, (gamma, gamma, gamma, gamma),
                     (z1_i, -np.asarray(z1_im1), z2_j, -np.asarray(z2_jm1)))
    return float(out) if np.ndim(out) == 0 else out


def m_update_1d(z, rho_i, rho_ip1, gamma_i, gamma_ip1):
    """Clamp ``z`` into ``[-rho_i gamma_i, rho_ip1 gamma_ip1]``."""
    out = np.minimum(np.maximum(z, -np.asarray(rho_i) * gamma_i),
                     np.asarray(rho_ip1) * gamma_ip1)
    return float(out) if np.ndim(out) == 0 else out


m_update_2d = m_update_1d


def m_update(z: np.ndarray, rho: np.ndarray, gamma: np.ndarray, axis: int) -> np.ndarray:
    """Array form of the momentum clamp along one spatial ``axis``."""
    upper = np.roll(rho * gamma, -1, axis=axis)
    return np.minimum(np.maximum(z, -rho * gamma), upper)


def _pairs(z, gamma, ndim):
    gs, ws = [], []
    for a in range(ndim):
        gs += [gamma, gamma]
        ws += [z[a], -np.roll(z[a], 1, axis=a + 1)]
    return gs, ws


def lagrangian(phi, rho, m, grid, data: HomogeneousData, c: float = 1.0,
               epsilon: float = 0.0) -> float:
    """Saddle objective in momentum variables.

    ``sum rho (D_t^- phi + f - eps Lap phi) + sum m . D^+ phi - (c/dt) sum phi[-1]``
    with all slopes taken at the later slice.
    """
    x, t = _space_time_coords(grid)
    later = phi[1:]
    shift = np.broadcast_to(data.shift(x, t), rho.shape)
    val = d_t_minus(phi, grid.dt) + shift
    if epsilon:
        val = val - epsilon * laplacian(later, grid.spacings)
    total = np.sum(rho * val)
    for a, h in enumerate(grid.spacings):
        total += np.sum(m[a] * d_plus(later, h, a + 1))
    total -= c / grid.dt * np.sum(phi[-1])
    return float(total)


def solve_homogeneous(grid, data: HomogeneousData, g, cfg: SolverConfig,
                      callback: Optional[Callable] = None):
    """PDHG in ``(phi, rho, m)`` for ``gamma |p|_1 + f``.

    Returns ``(phi, DualState(rho, m=...), SolveReport)``.  The stopping test
    uses the Engquist-Osher form ``gamma (max(p-, 0) + max(-p+, 0)) + f``.
    ``cfg.n_inner`` is ignored.
    """
    if data.ndim != grid.ndim:
        raise ValueError("Hamiltonian data and grid dimensions differ")
    start = time.perf_counter()
    tau, sigma = cfg.steps(grid, inner=False)
    eps, c, dt = cfg.epsilon, cfg.c, grid.dt
    d = grid.ndim
    x, t = _space_time_coords(grid)
    dual_shape = (grid.n_t - 1,) + grid.shape
    gamma = np.broadcast_to(np.asarray(data.speed(x, t), dtype=float), dual_shape)
    shift = np.broadcast_to(np.asarray(data.shift(x, t), dtype=float), dual_shape)
    h = data.hamiltonian()
    plan = PoissonPlan(grid)

    g0 = _initial_slice(grid, g)
    phi = np.broadcast_to(g0, (grid.n_t,) + grid.shape).copy()
    rho = np.full(dual_shape, c, dtype=float)
    m = tuple(np.zeros(dual_shape) for _ in range(d))
    n_points = int(np.prod(dual_shape))
    threshold = cfg.delta * (n_points if cfg.stop_rule == "mean" else 1)

    history: List[float] = []
    converged = False
    it = 0
    for it in range(1, int(cfg.n_outer) + 1):
        rhs = d_t_plus_rho(rho, c, dt)
        for a, hx in enumerate(grid.spacings):
            rhs += d_minus(m[a], hx, a + 1)
        if eps:
            rhs += eps * laplacian(rho, grid.spacings)
        phi_new = phi + tau * plan.solve(rhs)
        phi_new[0] = g0
        _check_finite("phi", phi_new, it)

        res = residual_sum(phi_new, grid, h, eps)
        history.append(res)
        if not np.isfinite(res) or res > DIVERGENCE_LIMIT:
            raise DivergenceError(f"residual {res:.3e} at outer iteration {it}")
        if res <= threshold:
            phi = phi_new
            converged = True
            break

        phi_bar = 2.0 * phi_new - phi
        later = phi_bar[1:]
        alpha = d_t_minus(phi_bar, dt) + shift
        if eps:
            alpha = alpha - eps * laplacian(later, grid.spacings)
        alpha = rho + sigma * alpha
        dp, _ = _slopes(later, grid)
        # rho and m both read the same z from the previous iterate
        z = tuple(m[a] + sigma * dp[a] for a in range(d))
        gs, ws = _pairs(z, gamma, d)
        rho = rho_update(alpha, gs, ws)
        m = tuple(m_update(z[a], rho, gamma, a + 1) for a in range(d))
        _check_finite("rho", rho, it)
        phi = phi_new
        if callback is not None:
            callback(it, phi, DualState(rho, m=m))

    report = SolveReport(converged=converged, outer_iterations=it,
                         residual_history=history,
                         final_residual=history[-1] if history else float("nan"),
                         wall_time=time.perf_counter() - start, n_points=n_points)
    if not converged:
        logger.warning("PDHG stopped after %d outer iterations, residual %.3e",
                       it, report.final_residual)
    return phi, DualState(rho, m=m), report


def solve_1d_homogeneous(grid, data: HomogeneousData, g, cfg: SolverConfig, callback=None):
    if grid.ndim != 1:
        raise ValueError("solve_1d_homogeneous needs a 1D grid")
    return solve_homogeneous(grid, data, g, cfg, callback)


def solve_2d_homogeneous(grid, data: HomogeneousData, g, cfg: SolverConfig, callback=None):
    if grid.ndim != 2:
        raise ValueError("solve_2d_homogeneous needs a 2D grid")
    return solve_homogeneous(grid, data, g, cfg, callback)
