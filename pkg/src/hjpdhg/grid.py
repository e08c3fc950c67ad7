"""Uniform periodic space-time grids and first-order difference operators.

Arrays are stored time-major: a primal field has shape ``(n_t, n_x)`` in 1D
and ``(n_t, n_x, n_y)`` in 2D, a dual field drops the first time slice and has
shape ``(n_t - 1, ...)``.  Storage index ``k`` (0-based) corresponds to time
``t_{k+1}`` in 1-based notation, so ``phi[0]`` is the initial slice and
``rho[k]`` pairs with ``phi[k + 1]``.  Spatial axes are periodic; the right
endpoint ``b`` is the same point as ``a`` and is not stored.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

__all__ = [
    "SpaceTimeGrid1D",
    "SpaceTimeGrid2D",
    "d_plus",
    "d_minus",
    "d_second",
    "d_x_plus",
    "d_x_minus",
    "d_xx",
    "d_t_minus",
    "d_t_plus_rho",
    "laplacian",
]


@dataclass(frozen=True)
class SpaceTimeGrid1D:
    a: float
    b: float
    n_x: int
    T: float
    n_t: int

    def __post_init__(self):
        if self.n_x < 1:
            raise ValueError(f"n_x must be positive, got {self.n_x}")
        if self.n_t < 2:
            raise ValueError(f"n_t must be at least 2, got {self.n_t}")
        if not self.b > self.a:
            raise ValueError("domain must satisfy b > a")
        if not self.T > 0:
            raise ValueError("horizon T must be positive")

    ndim = 1

    @property
    def dx(self) -> float:
        return (self.b - self.a) / self.n_x

    @property
    def dt(self) -> float:
        return self.T / (self.n_t - 1)

    @property
    def spacings(self) -> Tuple[float, ...]:
        return (self.dx,)

    @property
    def shape(self) -> Tuple[int, ...]:
        """Spatial shape."""
        return (self.n_x,)

    @property
    def x(self) -> np.ndarray:
        return self.a + self.dx * np.arange(self.n_x)

    @property
    def t(self) -> np.ndarray:
        return self.dt * np.arange(self.n_t)

    def coords(self) -> Tuple[np.ndarray, ...]:
        """Spatial coordinate arrays broadcastable against a spatial slice."""
        return (self.x,)

    def with_times(self, T: float, n_t: int) -> "SpaceTimeGrid1D":
        return SpaceTimeGrid1D(self.a, self.b, self.n_x, T, n_t)


@dataclass(frozen=True)
class SpaceTimeGrid2D:
    a1: float
    b1: float
    a2: float
    b2: float
    n_x: int
    n_y: int
    T: float
    n_t: int

    def __post_init__(self):
        if self.n_x < 1 or self.n_y < 1:
            raise ValueError("n_x and n_y must be positive")
        if self.n_t < 2:
            raise ValueError(f"n_t must be at least 2, got {self.n_t}")
        if not (self.b1 > self.a1 and self.b2 > self.a2):
            raise ValueError("domain must satisfy b1 > a1 and b2 > a2")
        if not self.T > 0:
            raise ValueError("horizon T must be positive")

    ndim = 2

    @property
    def dx(self) -> float:
        return (self.b1 - self.a1) / self.n_x

    @property
    def dy(self) -> float:
        return (self.b2 - self.a2) / self.n_y

    @property
    def dt(self) -> float:
        return self.T / (self.n_t - 1)

    @property
    def spacings(self) -> Tuple[float, ...]:
        return (self.dx, self.dy)

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.n_x, self.n_y)

    @property
    def x(self) -> np.ndarray:
        return self.a1 + self.dx * np.arange(self.n_x)

    @property
    def y(self) -> np.ndarray:
        return self.a2 + self.dy * np.arange(self.n_y)

    @property
    def t(self) -> np.ndarray:
        return self.dt * np.arange(self.n_t)

    def coords(self) -> Tuple[np.ndarray, ...]:
        return (self.x[:, None], self.y[None, :])

    def with_times(self, T: float, n_t: int) -> "SpaceTimeGrid2D":
        return SpaceTimeGrid2D(self.a1, self.b1, self.a2, self.b2,
                               self.n_x, self.n_y, T, n_t)


# Array-level stencils.  ``axis`` is the array axis of the spatial direction,
# which for time-major fields is 1 (x) or 2 (y); negative axes address
# spatial slices directly.

def d_plus(f: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Forward difference ``(f[i+1] - f[i]) / h`` with periodic wrap."""
    return (np.roll(f, -1, axis=axis) - f) / h


def d_minus(f: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Backward difference ``(f[i] - f[i-1]) / h`` with periodic wrap."""
    return (f - np.roll(f, 1, axis=axis)) / h


def d_second(f: np.ndarray, h: float, axis: int) -> np.ndarray:
    return (np.roll(f, -1, axis=axis) - 2.0 * f + np.roll(f, 1, axis=axis)) / h**2


def laplacian(f: np.ndarray, spacings, first_axis: int = 1) -> np.ndarray:
    """Sum of second differences over the spatial axes."""
    out = np.zeros_like(f, dtype=float)
    for n, h in enumerate(spacings):
        out += d_second(f, h, first_axis + n)
    return out


# Pointwise forms on a single spatial slice (0-based index ``i``).

def d_x_plus(f, i: int, dx: float) -> float:
    f = np.asarray(f)
    n = f.shape[0]
    return (f[(i + 1) % n] - f[i]) / dx


def d_x_minus(f, i: int, dx: float) -> float:
    f = np.asarray(f)
    n = f.shape[0]
    return (f[i] - f[(i - 1) % n]) / dx


def d_xx(f, i: int, dx: float) -> float:
    f = np.asarray(f)
    n = f.shape[0]
    return (f[(i + 1) % n] - 2.0 * f[i] + f[(i - 1) % n]) / dx**2


def d_t_minus(phi: np.ndarray, dt: float) -> np.ndarray:
    """Backward time difference at slices ``1..n_t-1``; shape ``(n_t-1, ...)``.

    Entry ``k`` is ``(phi[k+1] - phi[k]) / dt``.
    """
    return (phi[1:] - phi[:-1]) / dt


def d_t_plus_rho(rho: np.ndarray, c: float, dt: float) -> np.ndarray:
    """Forward time difference of a dual field with terminal value ``c``.

    The last row uses ``(c - rho[-1]) / dt``.
    """
    out = np.empty_like(rho, dtype=float)
    out[:-1] = (rho[1:] - rho[:-1]) / dt
    out[-1] = (c - rho[-1]) / dt
    return out
