"""Matrix-free all-at-once solvers for optimal control of the wave equation.

The saddle-point system couples every time level of a leap-frog
discretization; MINRES with block-diagonal SPD preconditioners built from
circulant or sine-transform approximations of its time structure solves it
in a number of iterations that is nearly independent of the mesh.
"""
from .krylov import SolveReport, minres, minres_unpreconditioned
from .operators import BlockToeplitzT, NegativeLaplacian, SaddleOperator, ZeroLaplacian
from .preconditioners import build_preconditioner
from .problem import (
    GridSpec,
    assemble_rhs,
    build_grid,
    coupled_grid,
    error_norms,
    example_1d,
    example_2d,
    get_problem,
    recover_solution,
)

__all__ = [
    "BlockToeplitzT",
    "GridSpec",
    "NegativeLaplacian",
    "SaddleOperator",
    "SolveReport",
    "ZeroLaplacian",
    "assemble_rhs",
    "build_grid",
    "build_preconditioner",
    "coupled_grid",
    "error_norms",
    "example_1d",
    "example_2d",
    "get_problem",
    "minres",
    "minres_unpreconditioned",
    "recover_solution",
]
__version__ = "0.1.0"
