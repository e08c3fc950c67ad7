"""Space-time elliptic solve used as the preconditioned primal step.

Solves ``-(D_tt u)[k+1] - (Lap_h u)[k+1] = f[k]`` for ``k = 0..n_t-2`` with
``u[0] = 0`` (Dirichlet start) and the ghost value ``u[n_t] = u[n_t-1]``
(Neumann end).  Space is periodic, so the discrete Laplacian is diagonalised by
an FFT; the remaining time operator is tridiagonal for every spatial frequency
and is solved by a vectorised Thomas sweep.
"""
from __future__ import annotations

import numpy as np

from .grid import laplacian

__all__ = ["PoissonPlan", "forward_apply", "solve"]


def _spatial_eigenvalues(n: int, h: float) -> np.ndarray:
    w = np.arange(n)
    return (2.0 - 2.0 * np.cos(2.0 * np.pi * w / n)) / h**2


class PoissonPlan:
    """Precomputed Thomas factorisation for one grid.

    The plan is immutable after construction; every solve allocates its own
    work arrays.
    """

    def __init__(self, grid):
        self.grid = grid
        self.m = grid.n_t - 1  # unknowns u[1..n_t-1]
        eigs = [_spatial_eigenvalues(n, h) for n, h in zip(grid.shape, grid.spacings)]
        lam = eigs[0]
        for e in eigs[1:]:
            lam = np.add.outer(lam, e)
        self.eigenvalues = lam
        inv_dt2 = 1.0 / grid.dt**2
        self._off = -inv_dt2

        diag = np.empty((self.m,) + lam.shape)
        diag[:] = 2.0 * inv_dt2 + lam
        diag[-1] = inv_dt2 + lam
        # LU of the symmetric tridiagonal with constant off-diagonal.
        piv = np.empty_like(diag)
        piv[0] = diag[0]
        for k in range(1, self.m):
            piv[k] = diag[k] - self._off**2 / piv[k - 1]
        self.min_pivot = float(np.min(piv))
        if self.min_pivot < 1e-14 * inv_dt2:
            raise np.linalg.LinAlgError("space-time operator is numerically singular")
        self._piv = piv

    def solve(self, f: np.ndarray) -> np.ndarray:
        grid = self.grid
        expected = (self.m,) + grid.shape
        if f.shape != expected:
            raise ValueError(f"right-hand side has shape {f.shape}, expected {expected}")
        axes = tuple(range(1, 1 + grid.ndim))
        fh = np.fft.fftn(f, axes=axes)
        piv, off = self._piv, self._off
        y = np.empty_like(fh)
        y[0] = fh[0]
        for k in range(1, self.m):
            y[k] = fh[k] - (off / piv[k - 1]) * y[k - 1]
        uh = np.empty_like(fh)
        uh[-1] = y[-1] / piv[-1]
        for k in range(self.m - 2, -1, -1):
            uh[k] = (y[k] - off * uh[k + 1]) / piv[k]
        u = np.zeros((grid.n_t,) + grid.shape)
        u[1:] = np.fft.ifftn(uh, axes=axes).real
        return u


def solve(plan: PoissonPlan, f: np.ndarray) -> np.ndarray:
    return plan.solve(f)


def forward_apply(grid, u: np.ndarray) -> np.ndarray:
    """Explicit stencil ``-(D_tt u) - (Lap_h u)`` on slices ``1..n_t-1``.

    ``u[0]`` plays the Dirichlet role and the ghost slice equals ``u[-1]``.
    """
    dt2 = grid.dt**2
    ext = np.concatenate([u, u[-1:]], axis=0)
    dtt = (ext[:-2] - 2.0 * ext[1:-1] + ext[2:]) / dt2
    return -dtt - laplacian(u[1:], grid.spacings)
