"""Shared oracles for the test suite."""
import numpy as np


def prox_objective(h, x, t, d_plus, d_minus, v_old_plus, v_old_minus, rho, sigma, v_plus, v_minus):
    """``H*(v) - <v, d> + rho / (2 sigma) |v - v_old|^2`` at candidate points.

    Inputs broadcast; infeasible points give ``inf``.
    """
    val = h.conjugate(x, t, v_plus, v_minus)
    for v, d, vo in zip(v_plus, d_plus, v_old_plus):
        val = val - v * d + rho / (2 * sigma) * (v - vo) ** 2
    for v, d, vo in zip(v_minus, d_minus, v_old_minus):
        val = val - v * d + rho / (2 * sigma) * (v - vo) ** 2
    return val


def grid_min_1d(fun, lo, hi, step=1e-3):
    y = np.arange(lo, hi + step / 2, step)
    return float(np.min(fun(y)))


def exact_quadratic_1d(x, t):
    """Closed-form solution of the quadratic benchmark for ``t >= 0``."""
    d = np.abs(((x - 1.0) + 1.0) % 2.0 - 1.0)  # periodic distance to x = 1
    return 0.5 * d**2 / (1.0 + t)
