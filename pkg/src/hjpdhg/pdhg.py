"""PDHG solvers for the implicit monotone scheme in 1D and 2D.

The backward-Euler scheme

    (D_t^- phi)[k] + H^(x, t_k, D^+ phi, D^- phi) - eps Lap_h phi = 0,  k >= 1

is the constraint of a saddle problem in ``phi`` (primal) and the multiplier
``rho >= 0`` with dual velocities ``v+, v-`` (one pair per axis).  Each outer
iteration takes a preconditioned primal step (a space-time Poisson solve),
extrapolates, then runs ``n_inner`` alternating rounds of the pointwise
velocity prox and the projected ``rho`` ascent.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Tuple

import numpy as np

from .grid import d_minus, d_plus, d_t_minus, d_t_plus_rho, laplacian
from .hamiltonian import HomogeneousData, NumericalHamiltonian, conjugate_value
from .poisson import PoissonPlan

__all__ = [
    "SolverConfig",
    "SolveReport",
    "DualState",
    "DivergenceError",
    "step_product",
    "pointwise_residual",
    "residual_sum",
    "solve",
    "solve_1d",
    "solve_2d",
    "solve_windowed",
]

logger = logging.getLogger(__name__)

# Residual magnitude treated as divergence.
DIVERGENCE_LIMIT = 1e12


class DivergenceError(RuntimeError):
    """Raised when an iterate becomes non-finite or the residual explodes."""


def step_product(grid, epsilon: float = 0.0, safety: float = 0.9) -> float:
    """Largest safe ``tau * sigma``: ``safety / (2 + 4 eps / dx)^2``."""
    h = min(grid.spacings)
    return float(safety / (2.0 + 4.0 * epsilon / h) ** 2)


@dataclass
class SolverConfig:
    """Parameters of the PDHG iteration.

    When ``tau`` or ``sigma`` is ``None`` the pair is derived from
    :func:`step_product` and ``step_ratio = tau / sigma``.  In the general
    solver the ``n_inner`` dual rounds act like one dual step of size
    ``n_inner * sigma``, so the product is divided by ``n_inner`` there.
    ``stop_rule`` selects whether ``delta`` bounds the sum or the mean of
    the absolute pointwise residuals.
    """

    tau: Optional[float] = None
    sigma: Optional[float] = None
    c: float = 1.0
    delta: float = 1e-6
    n_inner: int = 10
    n_outer: int = 100_000
    epsilon: float = 0.0
    time_windows: int = 1
    stop_rule: str = "mean"
    step_ratio: float = 1.0

    def __post_init__(self):
        for name in ("tau", "sigma"):
            val = getattr(self, name)
            if val is not None and not val > 0:
                raise ValueError(f"{name} must be positive, got {val}")
        if not self.c > 0:
            raise ValueError(f"c must be positive, got {self.c}")
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if int(self.n_inner) < 1 or int(self.n_outer) < 1:
            raise ValueError("n_inner and n_outer must be positive integers")
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")
        if int(self.time_windows) < 1:
            raise ValueError("time_windows must be a positive integer")
        if not self.step_ratio > 0:
            raise ValueError("step_ratio must be positive")
        if self.stop_rule not in ("sum", "mean"):
            raise ValueError("stop_rule must be 'sum' or 'mean'")

    def steps(self, grid, inner: bool = True) -> Tuple[float, float]:
        prod = step_product(grid, self.epsilon)
        if inner:
            prod /= int(self.n_inner)
        if self.tau is not None and self.sigma is not None:
            return float(self.tau), float(self.sigma)
        if self.tau is not None:
            return float(self.tau), prod / self.tau
        if self.sigma is not None:
            return prod / self.sigma, float(self.sigma)
        return float(np.sqrt(prod * self.step_ratio)), float(np.sqrt(prod / self.step_ratio))


@dataclass
class SolveReport:
    converged: bool
    outer_iterations: int
    residual_history: List[float] = field(default_factory=list)
    final_residual: float = float("nan")
    wall_time: float = 0.0
    n_points: int = 0

    @property
    def mean_residual(self) -> float:
        return self.final_residual / self.n_points if self.n_points else float("nan")


@dataclass
class DualState:
    """Multiplier ``rho`` and either velocities or momenta, all over ``n_t - 1`` slices."""

    rho: np.ndarray
    v_plus: Tuple[np.ndarray, ...] = ()
    v_minus: Tuple[np.ndarray, ...] = ()
    m: Tuple[np.ndarray, ...] = ()


def _space_time_coords(grid):
    """Coordinates and times broadcastable over a dual field ``(n_t-1, ...)``."""
    x = tuple(np.asarray(c)[None] for c in grid.coords())
    t = grid.t[1:].reshape((-1,) + (1,) * grid.ndim)
    return x, t


def _slopes(f, grid):
    plus = tuple(d_plus(f, h, a + 1) for a, h in enumerate(grid.spacings))
    minus = tuple(d_minus(f, h, a + 1) for a, h in enumerate(grid.spacings))
    return plus, minus


def pointwise_residual(phi: np.ndarray, grid, h: NumericalHamiltonian,
                       epsilon: float = 0.0) -> np.ndarray:
    """Scheme residual at slices ``1..n_t-1``; shape ``(n_t-1, ...)``."""
    x, t = _space_time_coords(grid)
    later = phi[1:]
    plus, minus = _slopes(later, grid)
    res = d_t_minus(phi, grid.dt) + h.value(x, t, plus, minus)
    if epsilon:
        res = res - epsilon * laplacian(later, grid.spacings)
    return res


def residual_sum(phi: np.ndarray, grid, h: NumericalHamiltonian,
                 epsilon: float = 0.0) -> float:
    """Sum of absolute scheme residuals over all points with ``k >= 2``."""
    return float(np.sum(np.abs(pointwise_residual(phi, grid, h, epsilon))))


def _initial_slice(grid, g) -> np.ndarray:
    if callable(g):
        g0 = g(*grid.coords())
    else:
        g0 = g
    return np.broadcast_to(np.asarray(g0, dtype=float), grid.shape).copy()


def _check_finite(name, arr, it):
    if not np.all(np.isfinite(arr)):
        raise DivergenceError(f"non-finite {name} at outer iteration {it}")


def solve(grid, h: NumericalHamiltonian, g, cfg: SolverConfig,
          callback: Optional[Callable] = None):
    """Run the general PDHG iteration on ``grid``.

    Parameters
    ----------
    grid : SpaceTimeGrid1D or SpaceTimeGrid2D
    h : NumericalHamiltonian
        Must match ``grid.ndim``.
    g : callable or array
        Initial condition, ``g(*grid.coords())`` or an array of spatial shape.
    cfg : SolverConfig
    callback : callable, optional
        Called as ``callback(it, phi, dual)`` after every inner loop.

    Returns
    -------
    phi : ndarray, shape ``(n_t,) + grid.shape``
    dual : DualState
    report : SolveReport
    """
    if h.ndim != grid.ndim:
        raise ValueError("Hamiltonian and grid dimensions differ")
    start = time.perf_counter()
    tau, sigma = cfg.steps(grid)
    eps, c, dt = cfg.epsilon, cfg.c, grid.dt
    d = grid.ndim
    x, t = _space_time_coords(grid)
    plan = PoissonPlan(grid)

    g0 = _initial_slice(grid, g)
    phi = np.broadcast_to(g0, (grid.n_t,) + grid.shape).copy()
    dual_shape = (grid.n_t - 1,) + grid.shape
    rho = np.full(dual_shape, c, dtype=float)
    v_plus = tuple(np.zeros(dual_shape) for _ in range(d))
    v_minus = tuple(np.zeros(dual_shape) for _ in range(d))
    n_points = int(np.prod(dual_shape))
    threshold = cfg.delta * (n_points if cfg.stop_rule == "mean" else 1)

    history: List[float] = []
    converged = False
    it = 0
    for it in range(1, int(cfg.n_outer) + 1):
        rhs = d_t_plus_rho(rho, c, dt)
        for a, hx in enumerate(grid.spacings):
            rhs += d_minus(rho * v_plus[a], hx, a + 1) + d_plus(rho * v_minus[a], hx, a + 1)
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
        dtm = d_t_minus(phi_bar, dt)
        dp, dm = _slopes(later, grid)
        lap = eps * laplacian(later, grid.spacings) if eps else 0.0
        for _ in range(int(cfg.n_inner)):
            v_plus, v_minus = h.prox(x, t, dp, dm, v_plus, v_minus, rho, sigma)
            mu = dtm - lap - conjugate_value(h, x, t, v_plus, v_minus)
            for a in range(d):
                mu = mu + v_plus[a] * dp[a] + v_minus[a] * dm[a]
            rho = np.maximum(rho + sigma * mu, 0.0)
        _check_finite("rho", rho, it)
        phi = phi_new
        if callback is not None:
            callback(it, phi, DualState(rho, v_plus, v_minus))

    report = SolveReport(converged=converged, outer_iterations=it,
                         residual_history=history,
                         final_residual=history[-1] if history else float("nan"),
                         wall_time=time.perf_counter() - start, n_points=n_points)
    if not converged:
        logger.warning("PDHG stopped after %d outer iterations, residual %.3e",
                       it, report.final_residual)
    return phi, DualState(rho, v_plus, v_minus), report


def solve_1d(grid, h, g, cfg: SolverConfig, callback=None):
    if grid.ndim != 1:
        raise ValueError("solve_1d needs a 1D grid")
    return solve(grid, h, g, cfg, callback)


def solve_2d(grid, h, g, cfg: SolverConfig, callback=None):
    if grid.ndim != 2:
        raise ValueError("solve_2d needs a 2D grid")
    return solve(grid, h, g, cfg, callback)


def solve_windowed(grid, h, g, cfg: SolverConfig, solver: Optional[Callable] = None):
    """Solve ``cfg.time_windows`` consecutive sub-horizons one after another.

    Each window starts from the last slice of the previous one.  Returns the
    concatenated field and the list of per-window reports.  ``solver`` has the
    signature of :func:`solve` and returns ``(phi, dual, report)``; it
    defaults to the homogeneous solver when ``h`` is a ``HomogeneousData``.
    Because the implicit scheme couples each slice only to the one before it,
    the windowed fixed point is the same as the single-window one.
    """
    if solver is None:
        from .homogeneous import solve_homogeneous
        solver = solve_homogeneous if isinstance(h, HomogeneousData) else solve
    n_windows = int(cfg.time_windows)
    steps = grid.n_t - 1
    if steps % n_windows:
        raise ValueError(f"n_t - 1 = {steps} is not divisible by {n_windows} windows")
    per = steps // n_windows
    sub_grid = grid.with_times(grid.T / n_windows, per + 1)
    sub_cfg = replace(cfg, time_windows=1)

    # Shift time so each window sees absolute times.
    slices = [_initial_slice(grid, g)[None]]
    reports = []
    current = slices[0][0]
    for w in range(n_windows):
        offset = w * sub_grid.T
        h_w = _time_shifted(h, offset)
        phi, _, report = solver(sub_grid, h_w, current, sub_cfg)
        reports.append(report)
        slices.append(phi[1:])
        current = phi[-1]
    return np.concatenate(slices, axis=0), reports


class _ShiftedHamiltonian(NumericalHamiltonian):
    """View of a Hamiltonian with time measured from ``offset``."""

    def __init__(self, base, offset):
        self.base, self.offset, self.ndim = base, offset, base.ndim

    def value(self, x, t, p_plus, p_minus):
        return self.base.value(x, t + self.offset, p_plus, p_minus)

    def conjugate(self, x, t, v_plus, v_minus):
        return self.base.conjugate(x, t + self.offset, v_plus, v_minus)

    def prox(self, x, t, d_plus, d_minus, v_plus, v_minus, rho, sigma):
        return self.base.prox(x, t + self.offset, d_plus, d_minus,
                              v_plus, v_minus, rho, sigma)

    def speed(self, x, t):
        return self.base.speed(x, t + self.offset)

    def f(self, x, t):
        return self.base.f(x, t + self.offset)


def _shift_field(fn, offset):
    if fn is None or np.isscalar(fn):
        return fn
    return lambda *args: fn(*args[:-1], args[-1] + offset)


def _time_shifted(h, offset):
    if offset == 0:
        return h
    if isinstance(h, HomogeneousData):
        return HomogeneousData(h.ndim, _shift_field(h.gamma, offset), _shift_field(h.f, offset))
    return _ShiftedHamiltonian(h, offset)
