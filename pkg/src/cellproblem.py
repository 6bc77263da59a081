"""
Periodic cell problems on the reference cell Y* and the effective tensor A.

For each direction j the corrector w_j solves the pure-Neumann periodic
problem -div(grad w_j + e_j) = 0 with zero mean. A is assembled from the
face energies (grad w_j + e_j) . (grad w_k + e_k) with the same discrete
gradient the operator uses.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .errors import GeometryError
from .geometry import PerforatedGrid
from .linsolve import DEFAULT_MAX_ITER, DEFAULT_TOL, FaceGradient, SparseOperator, assemble_face_gradient, solve_spd
from .models import CellReport

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class CellSolution:
    """Correctors w (dim, n_fluid), effective tensor A and porosity theta."""

    cell: PerforatedGrid
    w: np.ndarray
    A: np.ndarray
    theta: float
    radius: float
    iterations: List[int]
    residuals: List[float]

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.A)

    def to_report(self) -> CellReport:
        return CellReport(
            dim=self.cell.dim,
            r=self.radius,
            m_cell=self.cell.m_cell,
            theta=self.theta,
            A=[float(v) for v in self.A.ravel()],
            iterations=list(self.iterations),
            residuals=list(self.residuals),
        )


def _face_fields(grad: FaceGradient, field: np.ndarray, macro_grad: np.ndarray) -> np.ndarray:
    """grad_h field + macro_grad, one value per fluid-fluid face."""
    return grad.matrix @ field + np.asarray(macro_grad, dtype=float)[grad.axis]


def cell_energy(cell: PerforatedGrid, field: np.ndarray, macro_grad, grad: Optional[FaceGradient] = None) -> float:
    """Sum over faces of (grad_h field + macro_grad)^2 times the voxel volume."""
    grad = grad or assemble_face_gradient(cell)
    flux = _face_fields(grad, field, macro_grad)
    return cell.voxel_volume * math.fsum(flux * flux)


def solve_cell_problem(
    cell: PerforatedGrid,
    radius: float = 0.0,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    threads: int = 1,
) -> CellSolution:
    """
    Solve the dim corrector problems and assemble A and theta.

    Raises:
        GeometryError: If the cell is not periodic or A is not positive definite
        SolverConvergenceError: If a corrector solve stalls
    """
    if not cell.periodic:
        raise GeometryError("Cell problems need a periodic reference cell")

    dim = cell.dim
    grad = assemble_face_gradient(cell)
    unit = np.eye(dim)

    if not len(cell.gamma_faces):
        # Without a hole the correctors vanish identically
        return CellSolution(
            cell=cell, w=np.zeros((dim, cell.n_fluid)), A=np.eye(dim), theta=1.0,
            radius=radius, iterations=[0] * dim, residuals=[0.0] * dim,
        )

    op = SparseOperator(matrix=(grad.matrix.T @ grad.matrix).tocsr(), neumann=True)

    def corrector(j: int):
        rhs = -(grad.matrix.T @ unit[j][grad.axis])
        return solve_spd(op, rhs, tol=tol, max_iter=max_iter)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(corrector, range(dim)))
    else:
        results = [corrector(j) for j in range(dim)]

    w = np.vstack([r.x for r in results])
    fluxes = [_face_fields(grad, w[j], unit[j]) for j in range(dim)]
    A = np.empty((dim, dim))
    for j in range(dim):
        for k in range(dim):
            A[j, k] = cell.voxel_volume * math.fsum(fluxes[j] * fluxes[k])

    smallest = float(np.linalg.eigvalsh(A).min())
    if smallest <= 0:
        raise GeometryError(f"Effective tensor is not positive definite (smallest eigenvalue {smallest:.3e})")

    solution = CellSolution(
        cell=cell, w=w, A=A, theta=cell.theta, radius=radius,
        iterations=[r.iterations for r in results],
        residuals=[r.residual for r in results],
    )
    logger.info(
        "Cell problem dim=%d m=%d r=%g: theta=%.6f, diag(A)=%s",
        dim, cell.m_cell, radius, solution.theta, np.array2string(np.diag(A), precision=6),
    )
    return solution


def corrector_reconstruct(solution: CellSolution, macro_grad) -> np.ndarray:
    """u1(y) = sum_j macro_grad_j w_j(y), zero mean on Y*."""
    macro_grad = np.asarray(macro_grad, dtype=float)
    if macro_grad.shape != (solution.cell.dim,):
        raise ValueError(f"macro_grad must have length {solution.cell.dim}")
    return macro_grad @ solution.w
