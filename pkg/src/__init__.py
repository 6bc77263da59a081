"""
Perforated-Domain Coagulation Homogenization Workbench

Numerical solvers for truncated coagulation-fragmentation-diffusion systems on
periodically perforated domains, their homogenized limit, and a harness that
measures how the two approach each other as the period shrinks.
"""

__version__ = "1.0.0"
__author__ = "Workbench Numerics Team"

# Import main components for easy access
from .cellproblem import CellSolution, corrector_reconstruct, solve_cell_problem
from .config import settings
from .convergence import cell_average, compare, duality_diagnostic
from .geometry import DomainSpec, PerforatedGrid, build_perforated_grid, build_reference_cell
from .kernels import KernelSet, build_builtin_kernels, validate_kernels
from .models import ConvergenceReport, RunConfig
from .reaction import eval_coagulation, eval_fragmentation
from .solvers import run_macro, run_micro
from .workflow import ConvergenceWorkflow

__all__ = [
    "CellSolution",
    "corrector_reconstruct",
    "solve_cell_problem",
    "settings",
    "cell_average",
    "compare",
    "duality_diagnostic",
    "DomainSpec",
    "PerforatedGrid",
    "build_perforated_grid",
    "build_reference_cell",
    "KernelSet",
    "build_builtin_kernels",
    "validate_kernels",
    "ConvergenceReport",
    "RunConfig",
    "eval_coagulation",
    "eval_fragmentation",
    "run_macro",
    "run_micro",
    "ConvergenceWorkflow",
]
