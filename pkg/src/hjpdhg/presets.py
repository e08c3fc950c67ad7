"""The four benchmark problems, in 1D and 2D, with their reference solutions.

A preset bundles the Hamiltonian, the initial condition, the diffusion
coefficient and tuned solver defaults.  ``time_windows="per_step"`` asks for
one implicit step per window, which reaches the residual tolerance much
faster than a single long window on these problems.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np

from .grid import SpaceTimeGrid1D, SpaceTimeGrid2D
from .hamiltonian import HomogeneousData, make_hamiltonian
from .pdhg import SolverConfig, solve_windowed
from .reference import explicit_eo_solve, hopf_lax_l1, hopf_lax_quadratic, reference_field

__all__ = ["Preset", "PRESETS", "get_preset", "make_grid", "resolve_config", "reference_solution", "run_preset"]

DOMAIN = (0.0, 2.0)
HORIZON = 1.0


# Initial conditions -------------------------------------------------------

def half_sq_dist(*x):
    return 0.5 * sum((xi - 1.0) ** 2 for xi in x)


def sin_sum(*x):
    return sum(np.sin(np.pi * xi) for xi in x)


def neg_tenth_sq_dist(*x):
    return -0.1 * sum((xi - 1.0) ** 2 for xi in x)


INITIAL = {"half_sq_dist": half_sq_dist, "sin_sum": sin_sum, "neg_tenth_sq_dist": neg_tenth_sq_dist}


# Running costs ------------------------------------------------------------

def bump(*args):
    """``3 exp(-4 |x - 1|^2) + 1``; the last argument is time."""
    x = args[:-1]
    return 3.0 * np.exp(-4.0 * sum((xi - 1.0) ** 2 for xi in x)) + 1.0


def moving_well(*args):
    """Periodic well travelling right at unit speed along the first axis."""
    x1, rest, t = args[0], args[1:-1], args[-1]
    s = x1 - t
    out = -0.5 * np.minimum(np.minimum((s - 0.5) ** 2, (s + 1.5) ** 2), (s - 2.5) ** 2)
    for xj in rest:
        out = out - 0.25 * (xj - 1.0) ** 2
    return out


SHIFTS = {"none": None, "bump": bump, "moving_well": moving_well}


@dataclass(frozen=True)
class Preset:
    """One benchmark problem.

    ``reference`` is ``"hopf_lax_quadratic"``, ``"hopf_lax_l1"`` or
    ``"explicit"``; ``slope_bound`` feeds the explicit scheme's step rule.
    """

    name: str
    hamiltonian: str
    initial: str
    shift: str = "none"
    epsilon: float = 0.0
    solver: str = "general"
    reference: str = "explicit"
    slope_bound: float = 1.0
    cfg: Dict[str, Any] = field(default_factory=dict)

    def build(self, ndim: int):
        """``(h, g)`` where ``h`` is a Hamiltonian or ``HomogeneousData``."""
        f = SHIFTS[self.shift]
        g = INITIAL[self.initial]
        if self.solver == "homogeneous":
            return HomogeneousData(ndim=ndim, f=f), g
        return make_hamiltonian(self.hamiltonian, ndim, shift=f), g


PRESETS: Dict[str, Preset] = {
    "quad": Preset("quad", "quadratic", "half_sq_dist", reference="hopf_lax_quadratic",
                   cfg={"time_windows": "per_step", "step_ratio": 0.01}),
    "l1": Preset("l1", "l1_homogeneous", "sin_sum", solver="homogeneous",
                 reference="hopf_lax_l1", cfg={"time_windows": "per_step", "step_ratio": 1e-4}),
    "norm_potential": Preset("norm_potential", "norm_potential", "sin_sum", shift="bump",
                             cfg={"time_windows": "per_step", "step_ratio": 0.01}),
    "viscous_xt": Preset("viscous_xt", "quadratic_shifted", "neg_tenth_sq_dist",
                         shift="moving_well", epsilon=0.1, slope_bound=2.0,
                         cfg={"time_windows": "per_step", "step_ratio": 0.01}),
}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def make_grid(ndim: int, n_x: int, n_t: int, n_y: Optional[int] = None):
    a, b = DOMAIN
    if ndim == 1:
        return SpaceTimeGrid1D(a, b, n_x, HORIZON, n_t)
    if ndim == 2:
        return SpaceTimeGrid2D(a, b, a, b, n_x, n_x if n_y is None else n_y, HORIZON, n_t)
    raise ValueError(f"dimension must be 1 or 2, got {ndim}")


def resolve_config(preset: Preset, grid, overrides: Optional[Dict[str, Any]] = None) -> SolverConfig:
    """Merge preset defaults and user overrides into a :class:`SolverConfig`."""
    merged: Dict[str, Any] = {"epsilon": preset.epsilon}
    merged.update(preset.cfg)
    merged.update(overrides or {})
    if merged.get("time_windows") == "per_step":
        merged["time_windows"] = grid.n_t - 1
    known = set(SolverConfig.__dataclass_fields__)
    unknown = set(merged) - known
    if unknown:
        raise ValueError(f"unknown solver settings: {sorted(unknown)}")
    return SolverConfig(**merged)


def reference_solution(preset: Preset, grid, refine: int = 8) -> np.ndarray:
    """Ground truth on ``grid``: Hopf-Lax where available, else a refined explicit run."""
    _, g = preset.build(grid.ndim)
    if preset.reference == "hopf_lax_quadratic":
        return reference_field(hopf_lax_quadratic, [half_sq_dist] * grid.ndim, grid)
    if preset.reference == "hopf_lax_l1":
        return reference_field(hopf_lax_l1, [sin_sum] * grid.ndim, grid)
    h, _ = preset.build(grid.ndim)
    if isinstance(h, HomogeneousData):
        h = h.hamiltonian()
    return explicit_eo_solve(grid, h, g, epsilon=preset.epsilon,
                             slope_bound=preset.slope_bound, refine=refine)


def run_preset(preset: Union[str, Preset], grid, cfg: Optional[SolverConfig] = None,
               **overrides) -> Tuple[np.ndarray, list]:
    """Solve a preset on ``grid``; returns ``(phi, window_reports)``."""
    if isinstance(preset, str):
        preset = get_preset(preset)
    if cfg is None:
        cfg = resolve_config(preset, grid, overrides)
    elif overrides:
        cfg = replace(cfg, **overrides)
    h, g = preset.build(grid.ndim)
    return solve_windowed(grid, h, g, cfg)
