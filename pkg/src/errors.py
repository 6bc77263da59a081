"""
Error types for the workbench.

Every error knows the CLI exit code it maps to and a snake_case reason slug
used in the machine-readable error JSON.
"""

from typing import List, Optional, Tuple


class WorkbenchError(Exception):
    """Base class for all workbench failures."""

    exit_code: int = 1
    reason: str = "workbench_error"


class ConfigError(WorkbenchError, ValueError):
    """Run configuration failed validation; carries every offending key."""

    exit_code = 2
    reason = "config_error"

    def __init__(self, issues: List[Tuple[str, str]]):
        self.issues = list(issues)
        summary = "; ".join(f"{key}: {message}" for key, message in self.issues)
        super().__init__(f"Invalid configuration: {summary}")

    @property
    def keys(self) -> List[str]:
        return [key for key, _ in self.issues]


class GeometryError(WorkbenchError, ValueError):
    """Non-conforming grid, oversized hole or disconnected fluid region."""

    exit_code = 2
    reason = "geometry_error"


class NumericalFailure(WorkbenchError, RuntimeError):
    """Positivity or mass-audit violation during time stepping."""

    exit_code = 3
    reason = "numerical_failure"

    def __init__(self, message: str, step: Optional[int] = None):
        self.step = step
        if step is not None:
            message = f"{message} (step {step})"
        super().__init__(message)


class SolverConvergenceError(WorkbenchError, RuntimeError):
    """Iterative solver stopped at max_iter above the requested tolerance."""

    exit_code = 4
    reason = "solver_non_convergence"

    def __init__(self, iterations: int, residual: float, tol: float):
        self.iterations = iterations
        self.residual = residual
        self.tol = tol
        super().__init__(
            f"CG did not converge: relative residual {residual:.3e} > tol {tol:.1e} "
            f"after {iterations} iterations"
        )
