"""Implicit finite-difference solvers for Hamilton-Jacobi equations.

The implicit Engquist-Osher discretisation is written as a saddle problem
and solved with preconditioned primal-dual hybrid gradient iterations.
"""
from .grid import SpaceTimeGrid1D, SpaceTimeGrid2D
from .hamiltonian import (
    HomogeneousData,
    L1EO,
    NormEO,
    QuadraticEO,
    conjugate_prox,
    conjugate_value,
    make_hamiltonian,
)
from .homogeneous import solve_1d_homogeneous, solve_2d_homogeneous, solve_homogeneous
from .metrics import avg_abs_residual, convergence_table, l1_relative_error
from .pdhg import (
    DivergenceError,
    SolveReport,
    SolverConfig,
    residual_sum,
    solve,
    solve_1d,
    solve_2d,
    solve_windowed,
)
from .poisson import PoissonPlan

__all__ = [
    "SpaceTimeGrid1D", "SpaceTimeGrid2D",
    "HomogeneousData", "L1EO", "NormEO", "QuadraticEO",
    "conjugate_prox", "conjugate_value", "make_hamiltonian",
    "solve_1d_homogeneous", "solve_2d_homogeneous", "solve_homogeneous",
    "avg_abs_residual", "convergence_table", "l1_relative_error",
    "DivergenceError", "SolveReport", "SolverConfig", "residual_sum",
    "solve", "solve_1d", "solve_2d", "solve_windowed",
    "PoissonPlan",
]

__version__ = "0.1.0"
