"""Reference solutions used to measure solver error.

* Hopf-Lax formulas for ``H = |p|^2 / 2`` and ``H = |p|_1`` with periodic
  initial data, evaluated by brute force on a sample grid and polished with a
  bracketing scalar minimiser.
* An explicit forward-Euler monotone scheme on a refined grid, for problems
  without a closed form.

Three periodic images per axis are enough for the quadratic formula as long
as ``t * max|grad g| <= b - a``, which holds for the horizons used here
(``T = 1``, width 2, slopes at most 1).
"""
from __future__ import annotations

import math
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import elementwise

from .grid import SpaceTimeGrid1D, SpaceTimeGrid2D, laplacian
from .hamiltonian import NumericalHamiltonian

__all__ = [
    "hopf_lax_quadratic",
    "hopf_lax_l1",
    "separable_reference",
    "reference_field",
    "explicit_eo_solve",
    "stable_substeps",
]

_CHUNK = 256


def _wrap(y, a, b):
    return a + np.mod(y - a, b - a)


def _polish(obj, args, s_best, f_best, lo, hi, h):
    """Refine a sampled minimiser with a bracketing search where possible.

    ``obj(s, *args)`` must be elementwise; the search evaluates it on subsets.
    """
    left = np.maximum(s_best - h, lo)
    right = np.minimum(s_best + h, hi)
    f_left, f_right = obj(left, *args), obj(right, *args)
    ok = (left < s_best) & (s_best < right) & (f_left >= f_best) & (f_right >= f_best) \
        & ((f_left > f_best) | (f_right > f_best))
    out = np.array(f_best, dtype=float, copy=True)
    if np.any(ok):
        res = elementwise.find_minimum(
            obj, (np.where(ok, left, -1.0), np.where(ok, s_best, 0.0), np.where(ok, right, 1.0)),
            args=args, tolerances=dict(xatol=1e-13, xrtol=1e-14))
        better = ok & np.isfinite(res.f_x)
        out = np.where(better, np.minimum(out, res.f_x), out)
    return out


def _sampled_min_1d(fun, x, p, lo, hi, n_samples):
    """``min_{s in [lo, hi]} fun(x, p, s)`` for every entry of ``x``.

    ``p`` is a per-point parameter broadcast with ``x``.
    """
    x, p, lo, hi = (np.ravel(v) for v in np.broadcast_arrays(
        np.asarray(x, float), np.asarray(p, float), np.asarray(lo, float), np.asarray(hi, float)))
    out = np.empty(x.shape)
    u = np.linspace(0.0, 1.0, n_samples + 1)
    for start in range(0, x.size, _CHUNK):
        sl = slice(start, start + _CHUNK)
        xs, ps, a, b = x[sl], p[sl], lo[sl], hi[sl]
        s = a[:, None] + (b - a)[:, None] * u[None, :]
        vals = fun(xs[:, None], ps[:, None], s)
        j = np.argmin(vals, axis=1)
        rows = np.arange(xs.size)
        h = (b - a) / n_samples
        out[sl] = _polish(lambda v, xv, pv: fun(xv, pv, v), (xs, ps),
                          s[rows, j], vals[rows, j], a, b, h)
    return out


def hopf_lax_quadratic(g: Callable, x, t, domain=(0.0, 2.0), n_samples: int = 4000):
    """``min_y g(y) + |x - y|^2 / (2 t)`` for periodic 1D ``g``.

    ``x`` and ``t`` broadcast together.  The minimum runs over one period
    around ``x`` shifted by ``-(b-a), 0, b-a``, i.e. over ``[x - 3L/2, x + 3L/2]``
    where ``L = b - a``, sampled with ``n_samples`` points per period.
    """
    a, b = map(float, domain)
    x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
    if np.any(t < 0):
        raise ValueError("t must be non-negative")
    out = np.empty(x.shape)
    zero = t == 0
    out[zero] = g(_wrap(x[zero], a, b))
    pos = ~zero
    if np.any(pos):
        L = b - a

        def fun(xv, tv, s):
            return g(_wrap(xv + s, a, b)) + s**2 / (2.0 * tv)

        # tiny t overflows the penalty to inf, which is the right limit
        with np.errstate(over="ignore"):
            out[pos] = _sampled_min_1d(fun, x[pos], t[pos], -1.5 * L, 1.5 * L, 3 * n_samples)
    return out if out.ndim else float(out)


def hopf_lax_l1(g: Callable, x, t, domain=(0.0, 2.0), n_samples: int = 4000):
    """``min_{|y - x| <= t} g(y)`` for periodic 1D ``g``.

    The window is sampled with ``n_samples`` points per period length and the
    best sample is polished, so results are monotone in ``t`` up to rounding.
    """
    a, b = map(float, domain)
    x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
    if np.any(t < 0):
        raise ValueError("t must be non-negative")
    L = b - a
    tw = np.minimum(t, L)  # a full period already covers every value
    n = max(int(math.ceil(n_samples * 2.0 * float(np.max(tw, initial=0.0)) / L)), 2)

    def fun(xv, _, s):
        return g(_wrap(xv + s, a, b))

    out = _sampled_min_1d(fun, x, 0.0, -tw, tw, n).reshape(x.shape)
    return out if out.ndim else float(out)


def separable_reference(oracle: Callable, gs: Sequence[Callable], xs, t, domains, **kw):
    """Sum of 1D reference values, valid when ``H`` and ``g`` split by axis.

    ``oracle`` is :func:`hopf_lax_quadratic` or :func:`hopf_lax_l1`;
    ``gs[i]`` is the part of ``g`` depending on axis ``i``.
    """
    total = 0.0
    for gi, xi, dom in zip(gs, xs, domains):
        total = total + oracle(gi, xi, t, dom, **kw)
    return total


def reference_field(oracle: Callable, gs: Sequence[Callable], grid, **kw) -> np.ndarray:
    """Evaluate a separable Hopf-Lax reference on every point of ``grid``.

    Each 1D factor is computed once on its own axis and then broadcast, so the
    cost is independent of the number of axes.
    """
    t = grid.t
    if grid.ndim == 1:
        axes = [grid.x]
        domains = [(grid.a, grid.b)]
    else:
        axes = [grid.x, grid.y]
        domains = [(grid.a1, grid.b1), (grid.a2, grid.b2)]
    out = np.zeros((grid.n_t,) + grid.shape)
    for a, (gi, xi, dom) in enumerate(zip(gs, axes, domains)):
        vals = oracle(gi, xi[None, :], t[:, None], dom, **kw)  # (n_t, n_a)
        shape = [grid.n_t] + [1] * grid.ndim
        shape[a + 1] = xi.size
        out = out + vals.reshape(shape)
    return out


def stable_substeps(dt: float, spacings, slope_bound: float, epsilon: float = 0.0,
                    cfl_safety: float = 0.5) -> int:
    """Number of explicit substeps per ``dt`` keeping the update monotone.

    Uses ``dt_fine * (d L / h + 2 d eps / h^2) <= cfl_safety`` with the
    smallest spacing ``h``, which implies ``dt_fine <= cfl_safety *
    min(h / L, h^2 / (2 d eps))``.
    """
    if not 0 < cfl_safety <= 1:
        raise ValueError("cfl_safety must lie in (0, 1]")
    if slope_bound < 0 or epsilon < 0:
        raise ValueError("slope bound and epsilon must be non-negative")
    h = min(spacings)
    d = len(spacings)
    rate = d * slope_bound / h + 2.0 * d * epsilon / h**2
    if rate == 0:
        return 1
    return max(1, int(math.ceil(dt * rate / cfl_safety)))


def explicit_eo_solve(grid, h: NumericalHamiltonian, g: Callable, epsilon: float = 0.0,
                      slope_bound: float = 1.0, refine: int = 8, cfl_safety: float = 0.5,
                      substeps: Optional[int] = None) -> np.ndarray:
    """Forward-Euler monotone scheme on a refined grid, restricted to ``grid``.

    Parameters
    ----------
    grid : SpaceTimeGrid1D or SpaceTimeGrid2D
        Coarse grid on which the result is returned.
    h : NumericalHamiltonian
        Monotone numerical Hamiltonian; ``slope_bound`` must bound the sum of
        its partial derivatives in the slopes along the solution.
    g : callable
        Initial condition ``g(*coords)``.
    refine : int
        Spatial refinement factor; coarse point ``i`` is fine point ``refine * i``.
    substeps : int, optional
        Explicit steps per coarse time step.  Defaults to the smallest stable
        count; a smaller explicit value that breaks the bound is rejected.

    Returns
    -------
    ndarray of shape ``(n_t,) + grid.shape``
    """
    if int(refine) != refine or refine < 1:
        raise ValueError("refine must be a positive integer")
    refine = int(refine)
    if grid.ndim == 1:
        fine = SpaceTimeGrid1D(grid.a, grid.b, grid.n_x * refine, grid.T, grid.n_t)
    else:
        fine = SpaceTimeGrid2D(grid.a1, grid.b1, grid.a2, grid.b2, grid.n_x * refine,
                               grid.n_y * refine, grid.T, grid.n_t)
    needed = stable_substeps(grid.dt, fine.spacings, slope_bound, epsilon, cfl_safety)
    if substeps is None:
        substeps = needed
    elif substeps < needed:
        raise ValueError(f"{substeps} substeps violate the stability bound; need {needed}")
    dt = grid.dt / substeps
    x = fine.coords()
    phi = np.broadcast_to(np.asarray(g(*x), dtype=float), fine.shape).copy()
    take = tuple(slice(None, None, refine) for _ in range(grid.ndim))
    out = np.empty((grid.n_t,) + grid.shape)
    out[0] = phi[take]
    for k in range(grid.n_t - 1):
        for s in range(substeps):
            t = grid.t[k] + s * dt
            plus = tuple((np.roll(phi, -1, axis=a) - phi) / hx for a, hx in enumerate(fine.spacings))
            minus = tuple((phi - np.roll(phi, 1, axis=a)) / hx for a, hx in enumerate(fine.spacings))
            rate = h.value(x, t, plus, minus)
            if epsilon:
                rate = rate - epsilon * laplacian(phi, fine.spacings, first_axis=0)
            phi = phi - dt * rate
        if not np.all(np.isfinite(phi)):
            raise FloatingPointError("explicit scheme blew up; check slope_bound")
        out[k + 1] = phi[take]
    return out
