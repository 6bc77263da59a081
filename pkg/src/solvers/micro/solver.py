import logging
from typing import Optional

import numpy as np

from ...geometry import DomainSpec, PerforatedGrid, build_perforated_grid
from ...kernels import KernelSet, build_builtin_kernels
from ...linsolve import SparseOperator, assemble_neumann_laplacian
from ...models import RunConfig
from ...source import BoundarySource
from ..base import LieSplittingSolver, SpeciesState, Trajectory, uniform_state

logger = logging.getLogger(__name__)


class MicroSolver(LieSplittingSolver):
    """Truncated system on the perforated grid with flux eps*psi on Gamma for monomers."""

    label = "micro"

    def __init__(self, grid: PerforatedGrid, kernels: KernelSet, source: BoundarySource, **options):
        if grid.epsilon is None:
            raise ValueError("MicroSolver needs a perforated grid with an epsilon attached")
        self.source = source
        super().__init__(grid, kernels, source.time_factor, **options)

    def build_operator(self) -> SparseOperator:
        return assemble_neumann_laplacian(self.grid)

    def species_diffusivity(self) -> np.ndarray:
        return self.k.d

    def build_source_profile(self) -> np.ndarray:
        """d_1 eps/h sum over owned Gamma faces of p(x_f) q(x_f/eps)."""
        faces = self.grid.gamma_faces
        if not len(faces) or self.source.is_zero:
            return np.zeros(self.grid.n_fluid)
        eps = self.grid.epsilon
        spatial = self.source.on_faces(faces.center, eps)
        per_voxel = np.bincount(faces.voxel, weights=spatial, minlength=self.grid.n_fluid)
        return self.k.d[0] * eps / self.grid.h * per_voxel


def domain_spec(config: RunConfig, epsilon: Optional[float] = None) -> DomainSpec:
    return DomainSpec(
        dim=config.dim,
        L=config.L,
        epsilon=config.epsilon if epsilon is None else epsilon,
        radius=config.radius,
        m_cell=config.m_cell,
    )


def init_state(grid: PerforatedGrid, kernels: KernelSet, U1: float) -> SpeciesState:
    """u_1 = U1 on fluid voxels, all other sizes zero, ledgers zeroed."""
    return uniform_state(grid.n_fluid, kernels.n_max, U1)


def build_micro_solver(
    config: RunConfig,
    epsilon: Optional[float] = None,
    threads: Optional[int] = None,
    kernels: Optional[KernelSet] = None,
) -> MicroSolver:
    grid = build_perforated_grid(domain_spec(config, epsilon))
    kernels = kernels or build_builtin_kernels(config.kernel, config.n_max)
    source = BoundarySource(config.psi)
    source.check_initial_bound(config.U1, config.T, config.L)
    return MicroSolver(
        grid,
        kernels,
        source,
        dt=config.dt,
        T=config.T,
        snapshot_stride=config.snapshot_stride,
        tol=config.tol,
        max_iter=config.max_iter,
        audit_tol=config.audit_tol,
        threads=threads or config.threads,
    )


def run_micro(
    config: RunConfig,
    epsilon: Optional[float] = None,
    threads: Optional[int] = None,
    kernels: Optional[KernelSet] = None,
) -> Trajectory:
    """
    Run the perforated-domain problem at one epsilon.

    Raises:
        GeometryError: If the grid does not conform
        NumericalFailure: On a positivity or mass-audit violation
        SolverConvergenceError: If a diffusion solve stalls
    """
    solver = build_micro_solver(config, epsilon, threads, kernels)
    logger.info(
        "Micro run eps=%g: %d fluid voxels, %d Gamma faces, n_max=%d",
        solver.grid.epsilon, solver.grid.n_fluid, len(solver.grid.gamma_faces), solver.k.n_max,
    )
    traj = solver.run(config.U1)
    traj.epsilon = solver.grid.epsilon
    return traj
