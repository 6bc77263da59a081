import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ...cellproblem import CellSolution
from ...geometry import PerforatedGrid, build_uniform_grid
from ...kernels import KernelSet, build_builtin_kernels
from ...linsolve import SparseOperator, assemble_tensor_laplacian
from ...models import RunConfig
from ...source import G_ZERO_TOL, BoundarySource
from ..base import LieSplittingSolver, Trajectory

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class HomogenizedCoefficients:
    """
    Effective tensor, porosity and the Gamma-integrated monomer source.

    gamma_source(t, x) = g(t) p(x) Q_ref, where Q_ref is the integral of q
    over the voxelized hole boundary of the reference cell.
    """

    A: np.ndarray
    theta: float
    Q_ref: float
    source: BoundarySource

    def gamma_source(self, t: float, x: np.ndarray) -> np.ndarray:
        return self.source.time_factor(t) * self.spatial_source(x)

    def spatial_source(self, x: np.ndarray) -> np.ndarray:
        return self.source.space_factor(x) * self.Q_ref


def build_homogenized_coefficients(solution: CellSolution, source: BoundarySource) -> HomogenizedCoefficients:
    """Take A and theta from a cell solution and integrate q over its Gamma faces."""
    g0 = source.time_factor(0.0)
    if abs(g0) > G_ZERO_TOL:
        raise ValueError(f"gamma_source(0, x) must vanish, but g(0) = {g0!r}")
    cell = solution.cell
    faces = cell.gamma_faces
    Q_ref = float(np.sum(source.cell_factor(faces.center))) * cell.face_measure if len(faces) else 0.0
    return HomogenizedCoefficients(A=solution.A.copy(), theta=solution.theta, Q_ref=Q_ref, source=source)


class MacroSolver(LieSplittingSolver):
    """
    Homogenized system on the unperforated domain.

    Both sides of the equations carry theta; dividing through leaves the
    reaction unchanged, scales diffusion to (d_i/theta) div(A grad) and the
    source to d_1 gamma_source/theta. Mass is theta times the field integral.
    """

    label = "macro"

    def __init__(self, grid: PerforatedGrid, kernels: KernelSet, coeffs: HomogenizedCoefficients, **options):
        if coeffs.theta <= 0:
            raise ValueError(f"theta must be positive, got {coeffs.theta}")
        self.coeffs = coeffs
        super().__init__(grid, kernels, coeffs.source.time_factor, **options)

    @property
    def mass_weight(self) -> float:
        return self.coeffs.theta

    def build_operator(self) -> SparseOperator:
        return assemble_tensor_laplacian(self.grid, self.coeffs.A)

    def species_diffusivity(self) -> np.ndarray:
        return self.k.d / self.coeffs.theta

    def build_source_profile(self) -> np.ndarray:
        if self.coeffs.Q_ref == 0:
            return np.zeros(self.grid.n_fluid)
        return self.k.d[0] * self.coeffs.spatial_source(self.grid.centers) / self.coeffs.theta


def run_macro(
    config: RunConfig,
    coeffs: HomogenizedCoefficients,
    threads: Optional[int] = None,
    kernels: Optional[KernelSet] = None,
) -> Trajectory:
    """Run the homogenized problem on [0, L]^dim with spacing h_macro."""
    grid = build_uniform_grid(config.dim, config.L, config.h_macro)
    kernels = kernels or build_builtin_kernels(config.kernel, config.n_max)
    solver = MacroSolver(
        grid,
        kernels,
        coeffs,
        dt=config.dt,
        T=config.T,
        snapshot_stride=config.snapshot_stride,
        tol=config.tol,
        max_iter=config.max_iter,
        audit_tol=config.audit_tol,
        threads=threads or config.threads,
    )
    logger.info("Macro run: %d voxels, theta=%.6f, Q_ref=%.6g", grid.n_fluid, coeffs.theta, coeffs.Q_ref)
    return solver.run(config.U1)
