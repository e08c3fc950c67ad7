"""Numerical Hamiltonians, their conjugates and the dual proximal step.

A numerical Hamiltonian acts on one-sided slopes.  Slopes and dual
velocities are passed as tuples with one array per spatial axis, e.g. in 2D
``p_plus = (p1_plus, p2_plus)``.  Coordinates ``x`` are a tuple of arrays
(``grid.coords()``) and ``t`` is an array broadcastable against them.

The proximal step solves, pointwise,

    argmin_v  H*(x, t, v) - <v, d> + rho / (2 sigma) * |v - v_old|^2

which is the completed-square form of the dual velocity update.  It stays
well defined when ``rho == 0``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

__all__ = [
    "NumericalHamiltonian",
    "QuadraticEO",
    "L1EO",
    "NormEO",
    "HomogeneousData",
    "eo_split_quadratic",
    "osher_sethian_norm",
    "l1_eo",
    "conjugate_prox",
    "conjugate_value",
    "make_hamiltonian",
]

Field = Callable[..., np.ndarray]

# Slack for feasibility checks on prox outputs, which sit on the boundary of
# the conjugate's domain up to rounding.
_FEAS_TOL = 1e-9


def _evaluate(fn, x, t, default: float = 0.0):
    if fn is None:
        return default
    if np.isscalar(fn):
        return float(fn)
    return fn(*x, t)


class NumericalHamiltonian:
    """Base class; subclasses implement ``value``, ``conjugate`` and ``prox``.

    ``shift`` is the running cost ``f(*x, t)`` added to the Hamiltonian; it
    enters the conjugate with a minus sign.
    """

    ndim: int = 1
    shift: Optional[Field] = None

    def f(self, x, t):
        return _evaluate(self.shift, x, t)

    def value(self, x, t, p_plus, p_minus):
        raise NotImplementedError

    def conjugate(self, x, t, v_plus, v_minus):
        raise NotImplementedError

    def prox(self, x, t, d_plus, d_minus, v_plus, v_minus, rho, sigma):
        raise NotImplementedError

    def _check(self, *seqs):
        for s in seqs:
            if len(s) != self.ndim:
                raise ValueError(f"expected {self.ndim} components, got {len(s)}")


@dataclass(frozen=True)
class QuadraticEO(NumericalHamiltonian):
    """Engquist-Osher split of ``|p|^2 / 2 + f``.

    Per axis ``min(p+, 0)^2 / 2 + max(p-, 0)^2 / 2``; the conjugate is
    ``v+^2 / 2 + v-^2 / 2 - f`` on ``v+ <= 0 <= v-``.
    """

    ndim: int = 1
    shift: Optional[Field] = None

    def value(self, x, t, p_plus, p_minus):
        self._check(p_plus, p_minus)
        out = self.f(x, t)
        for pp, pm in zip(p_plus, p_minus):
            out = out + 0.5 * np.minimum(pp, 0.0) ** 2 + 0.5 * np.maximum(pm, 0.0) ** 2
        return out

    def conjugate(self, x, t, v_plus, v_minus):
        self._check(v_plus, v_minus)
        out = -np.asarray(self.f(x, t), dtype=float)
        bad = False
        for vp, vm in zip(v_plus, v_minus):
            vp, vm = np.asarray(vp, float), np.asarray(vm, float)
            out = out + 0.5 * vp**2 + 0.5 * vm**2
            bad = bad | (vp > _FEAS_TOL) | (vm < -_FEAS_TOL)
        return np.where(bad, np.inf, out)

    def prox(self, x, t, d_plus, d_minus, v_plus, v_minus, rho, sigma):
        r = np.asarray(rho, float) / sigma
        new_plus = tuple(np.minimum(0.0, (d + r * v) / (1.0 + r))
                         for d, v in zip(d_plus, v_plus))
        new_minus = tuple(np.maximum(0.0, (d + r * v) / (1.0 + r))
                          for d, v in zip(d_minus, v_minus))
        return new_plus, new_minus


@dataclass(frozen=True)
class L1EO(NumericalHamiltonian):
    """Engquist-Osher split of ``gamma * |p|_1 + f``.

    Per axis ``gamma * (max(-p+, 0) + max(p-, 0))``.  The conjugate is the
    indicator of ``-gamma <= v+ <= 0 <= v- <= gamma`` minus ``f``.
    """

    ndim: int = 1
    gamma: Optional[Field] = None
    shift: Optional[Field] = None

    def speed(self, x, t):
        return _evaluate(self.gamma, x, t, default=1.0)

    def value(self, x, t, p_plus, p_minus):
        self._check(p_plus, p_minus)
        g = self.speed(x, t)
        out = self.f(x, t)
        for pp, pm in zip(p_plus, p_minus):
            out = out + g * (np.maximum(-np.asarray(pp), 0.0) + np.maximum(pm, 0.0))
        return out

    def conjugate(self, x, t, v_plus, v_minus):
        self._check(v_plus, v_minus)
        g = self.speed(x, t)
        out = -np.asarray(self.f(x, t), dtype=float)
        bad = False
        tol = _FEAS_TOL * (1.0 + np.abs(g))
        for vp, vm in zip(v_plus, v_minus):
            vp, vm = np.asarray(vp, float), np.asarray(vm, float)
            bad = bad | (vp > tol) | (vp < -g - tol) | (vm < -tol) | (vm > g + tol)
        return np.where(bad, np.inf, out)

    def prox(self, x, t, d_plus, d_minus, v_plus, v_minus, rho, sigma):
        g = self.speed(x, t)
        rho = np.asarray(rho, float)
        zero = rho <= 0.0
        rho_safe = np.where(zero, 1.0, rho)
        new_plus, new_minus = [], []
        for d, v in zip(d_plus, v_plus):
            w = v + sigma * d / rho_safe
            # rho == 0: maximise v*d over [-g, 0], minimum-norm on ties
            w = np.where(zero, np.where(d < 0, -np.inf, 0.0), w)
            new_plus.append(np.clip(w, -g, 0.0))
        for d, v in zip(d_minus, v_minus):
            w = v + sigma * d / rho_safe
            w = np.where(zero, np.where(d > 0, np.inf, 0.0), w)
            new_minus.append(np.clip(w, 0.0, g))
        return tuple(new_plus), tuple(new_minus)


@dataclass(frozen=True)
class NormEO(NumericalHamiltonian):
    """Osher-Sethian monotone form of ``|p|_2 + f``.

    ``sqrt(sum_axes min(p+, 0)^2 + max(p-, 0)^2) + f``.  Its conjugate is the
    indicator of ``S = {v+ <= 0 <= v-, |v|_2 <= 1}`` minus ``f``; projecting
    onto ``S`` is sign clamping followed by radial scaling.
    """

    ndim: int = 1
    shift: Optional[Field] = None

    def value(self, x, t, p_plus, p_minus):
        self._check(p_plus, p_minus)
        sq = 0.0
        for pp, pm in zip(p_plus, p_minus):
            sq = sq + np.minimum(pp, 0.0) ** 2 + np.maximum(pm, 0.0) ** 2
        return np.sqrt(sq) + self.f(x, t)

    def conjugate(self, x, t, v_plus, v_minus):
        self._check(v_plus, v_minus)
        out = -np.asarray(self.f(x, t), dtype=float)
        bad = False
        sq = 0.0
        for vp, vm in zip(v_plus, v_minus):
            vp, vm = np.asarray(vp, float), np.asarray(vm, float)
            bad = bad | (vp > _FEAS_TOL) | (vm < -_FEAS_TOL)
            sq = sq + vp**2 + vm**2
        bad = bad | (sq > (1.0 + _FEAS_TOL) ** 2)
        return np.where(bad, np.inf, out)

    def prox(self, x, t, d_plus, d_minus, v_plus, v_minus, rho, sigma):
        rho = np.asarray(rho, float)
        zero = rho <= 0.0
        rho_safe = np.where(zero, 1.0, rho)
        w_plus = [np.minimum(np.where(zero, d, v + sigma * d / rho_safe), 0.0)
                  for d, v in zip(d_plus, v_plus)]
        w_minus = [np.maximum(np.where(zero, d, v + sigma * d / rho_safe), 0.0)
                   for d, v in zip(d_minus, v_minus)]
        return project_orthant_ball(w_plus, w_minus, unit=zero)


def project_orthant_ball(w_plus, w_minus, unit=False):
    """Radially scale sign-clamped components into the unit ball.

    Where ``unit`` is true the nonzero vector is normalised to length one
    (support point of the ball), which is the ``rho -> 0`` limit of the prox.
    """
    sq = 0.0
    for w in list(w_plus) + list(w_minus):
        sq = sq + w**2
    norm = np.sqrt(sq)
    scale = np.where(norm > 1.0, 1.0 / np.where(norm > 0, norm, 1.0), 1.0)
    scale = np.where(unit & (norm > 0), 1.0 / np.where(norm > 0, norm, 1.0), scale)
    return (tuple(w * scale for w in w_plus), tuple(w * scale for w in w_minus))


@dataclass(frozen=True)
class HomogeneousData:
    """``H(x, t, p) = gamma(x, t) |p|_1 + f(x, t)`` with ``gamma > 0``.

    ``gamma`` and ``f`` are callables ``fn(*x, t)`` or constants.
    """

    ndim: int = 1
    gamma: Optional[Field] = None
    f: Optional[Field] = None

    def speed(self, x, t):
        g = _evaluate(self.gamma, x, t, default=1.0)
        if np.any(np.asarray(g) <= 0):
            raise ValueError("gamma must be strictly positive")
        return g

    def shift(self, x, t):
        return _evaluate(self.f, x, t)

    def hamiltonian(self) -> L1EO:
        return L1EO(ndim=self.ndim, gamma=self.gamma, shift=self.f)


def eo_split_quadratic(shift: Optional[Field] = None, ndim: int = 1) -> QuadraticEO:
    return QuadraticEO(ndim=ndim, shift=shift)


def osher_sethian_norm(shift: Optional[Field] = None, ndim: int = 1) -> NormEO:
    return NormEO(ndim=ndim, shift=shift)


def l1_eo(gamma: Optional[Field] = None, shift: Optional[Field] = None,
          ndim: int = 1) -> L1EO:
    return L1EO(ndim=ndim, gamma=gamma, shift=shift)


def conjugate_prox(h: NumericalHamiltonian, x, t, d_plus, d_minus,
                   v_plus, v_minus, rho, sigma):
    """Validated entry point for ``h.prox``."""
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if np.any(np.asarray(rho) < 0):
        raise ValueError("rho must be non-negative")
    return h.prox(x, t, d_plus, d_minus, v_plus, v_minus, rho, sigma)


def conjugate_value(h: NumericalHamiltonian, x, t, v_plus, v_minus):
    """Finite conjugate value; infeasible duals mean a solver bug."""
    val = h.conjugate(x, t, v_plus, v_minus)
    if not np.all(np.isfinite(val)):
        raise FloatingPointError("dual velocity outside the conjugate's domain")
    return val


def make_hamiltonian(name: str, ndim: int, shift: Optional[Field] = None,
                     gamma: Optional[Field] = None) -> NumericalHamiltonian:
    """Build a Hamiltonian from its configuration name."""
    if name == "quadratic":
        if shift is not None:
            raise ValueError("'quadratic' takes no shift; use 'quadratic_shifted'")
        return QuadraticEO(ndim=ndim)
    if name == "quadratic_shifted":
        return QuadraticEO(ndim=ndim, shift=shift)
    if name == "l1_homogeneous":
        return L1EO(ndim=ndim, gamma=gamma, shift=shift)
    if name == "norm_potential":
        return NormEO(ndim=ndim, shift=shift)
    raise ValueError(f"unknown Hamiltonian {name!r}")
