"""
Time integrators for the truncated system.

Each solver lives in its own subpackage and shares the Lie splitting,
positivity control and mass audit of LieSplittingSolver.
"""

from .base import LieSplittingSolver, SpeciesState, Trajectory, uniform_state
from .macro import HomogenizedCoefficients, MacroSolver, build_homogenized_coefficients, run_macro
from .micro import MicroSolver, build_micro_solver, domain_spec, init_state, run_micro

__all__ = [
    "LieSplittingSolver",
    "SpeciesState",
    "Trajectory",
    "uniform_state",
    "HomogenizedCoefficients",
    "MacroSolver",
    "build_homogenized_coefficients",
    "run_macro",
    "MicroSolver",
    "build_micro_solver",
    "domain_spec",
    "init_state",
    "run_micro",
]
