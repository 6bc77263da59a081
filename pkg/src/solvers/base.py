import logging
import math
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from ..diagnostics import effective_diffusivity_violations, relative_residual
from ..errors import NumericalFailure
from ..geometry import PerforatedGrid
from ..kernels import KernelSet
from ..linsolve import SparseOperator, solve_spd
from ..models import MassAuditRow
from ..reaction import coagulation_rates, fragmentation_rates

logger = logging.getLogger(__name__)

POSITIVITY_BOUND = 0.5
MAX_HALVINGS = 30
TIME_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class SpeciesState:
    """Fields over fluid voxels, shape (n_fluid, n_max), plus the mass ledgers."""

    t: float
    U: np.ndarray
    injected: float = 0.0
    lost: float = 0.0
    step: int = 0


def uniform_state(n_cells: int, n_max: int, U1: float) -> SpeciesState:
    U = np.zeros((n_cells, n_max))
    U[:, 0] = U1
    return SpeciesState(t=0.0, U=U)


@dataclass(eq=False)
class Trajectory:
    """Snapshots and audit of one run; identical schema for micro and macro runs."""

    label: str
    grid: PerforatedGrid
    mass_weight: float
    times: List[float] = field(default_factory=list)
    snapshots: List[np.ndarray] = field(default_factory=list)
    audit: List[MassAuditRow] = field(default_factory=list)
    maxima: Optional[np.ndarray] = None
    trace_max: float = 0.0
    steps: int = 0
    dt_final: float = 0.0
    cg_iterations: int = 0
    epsilon: Optional[float] = None

    @property
    def final(self) -> np.ndarray:
        return self.snapshots[-1]

    @property
    def max_audit_residual(self) -> float:
        return max((row.residual for row in self.audit), default=0.0)


class LieSplittingSolver(ABC):
    """
    Explicit reaction followed by implicit diffusion per species.

    Subclasses provide the diffusion operator, per-species diffusivities, the
    spatial profile of the monomer source and the weight that turns field
    integrals into mass.
    """

    label = "base"

    def __init__(
        self,
        grid: PerforatedGrid,
        kernels: KernelSet,
        time_factor: Callable[[float], float],
        *,
        dt: float,
        T: float,
        snapshot_stride: int = 10,
        tol: float = 1e-10,
        max_iter: int = 20000,
        audit_tol: float = 1e-8,
        threads: int = 1,
    ):
        self.grid = grid
        self.k = kernels
        self.time_factor = time_factor
        self.dt = dt
        self.T = T
        self.snapshot_stride = snapshot_stride
        self.tol = tol
        self.max_iter = max_iter
        self.audit_tol = audit_tol
        self.threads = max(1, threads)

        self.n_base_steps = int(round(T / dt))
        if self.n_base_steps < 1 or abs(self.n_base_steps * dt - T) > TIME_RTOL * T:
            raise ValueError(f"T={T} must be an integer multiple of dt={dt}")

        self.operator = self.build_operator()
        self.diffusivity = self.species_diffusivity()
        self.source_profile = self.build_source_profile()
        self._systems: Dict[Tuple[float, float], SparseOperator] = {}
        self._cg_iterations = 0

    @abstractmethod
    def build_operator(self) -> SparseOperator:
        """Discrete diffusion operator over fluid voxels."""

    @abstractmethod
    def species_diffusivity(self) -> np.ndarray:
        """Coefficient multiplying the operator for each species."""

    @abstractmethod
    def build_source_profile(self) -> np.ndarray:
        """Per-voxel monomer source rate at unit time factor."""

    @property
    def mass_weight(self) -> float:
        return 1.0

    def init_state(self, U1: float) -> SpeciesState:
        return uniform_state(self.grid.n_fluid, self.k.n_max, U1)

    def total_mass(self, U: np.ndarray) -> float:
        return self.mass_weight * self.grid.voxel_volume * math.fsum(U @ self.k.sizes)

    def stable_dt(self, U: np.ndarray, dt: float) -> bool:
        rate = float(np.max(self.k.positivity_rate(U))) if U.size else 0.0
        return dt * rate <= POSITIVITY_BOUND

    def _system(self, dt: float, diffusivity: float) -> SparseOperator:
        key = (dt, diffusivity)
        if key not in self._systems:
            self._systems[key] = self.operator.shifted(1.0, dt * diffusivity)
        return self._systems[key]

    def _diffuse(self, U: np.ndarray, dt: float) -> np.ndarray:
        def solve(i: int) -> Tuple[np.ndarray, int]:
            rhs = U[:, i]
            if not rhs.any():
                return np.zeros_like(rhs), 0
            result = solve_spd(self._system(dt, float(self.diffusivity[i])), rhs, self.tol, self.max_iter, x0=rhs)
            return result.x, result.iterations

        species = range(self.k.n_max)
        if self.threads > 1:
            # Build shared systems first so workers only read the cache
            for i in species:
                self._system(dt, float(self.diffusivity[i]))
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                results = list(pool.map(solve, species))
        else:
            results = [solve(i) for i in species]
        self._cg_iterations += sum(iterations for _, iterations in results)
        return np.column_stack([x for x, _ in results])

    def step(self, state: SpeciesState, dt: float, t_new: float) -> SpeciesState:
        """
        Advance one Lie step of size dt ending at t_new.

        Raises:
            NumericalFailure: If the reaction stage produces a negative value
        """
        U = state.U
        Q, mass_loss = coagulation_rates(self.k, U)
        U_react = U + dt * (Q + fragmentation_rates(self.k, U))
        if np.any(U_react < 0):
            where = np.unravel_index(int(np.argmin(U_react)), U_react.shape)
            raise NumericalFailure(
                f"Negative concentration {U_react[where]:.3e} for size {where[1] + 1} after reaction",
                step=state.step + 1,
            )
        lost = state.lost + dt * self.mass_weight * self.grid.voxel_volume * math.fsum(mass_loss)

        injected = state.injected
        g = self.time_factor(t_new)
        if g != 0.0 and self.source_profile.any():
            rate = g * self.source_profile
            U_react[:, 0] += dt * rate
            injected += dt * self.mass_weight * self.grid.voxel_volume * math.fsum(rate)

        U_new = self._diffuse(U_react, dt)
        floor = -self.tol * np.max(np.abs(U_new), axis=0)
        if np.any(U_new < floor):
            raise NumericalFailure("Negative concentration after diffusion", step=state.step + 1)

        return SpeciesState(t=t_new, U=U_new, injected=injected, lost=lost, step=state.step + 1)

    def run(self, U1: float) -> Trajectory:
        """
        Integrate to T with mass audit at every step.

        dt is halved permanently whenever the positivity bound fails; time is
        counted in base steps so snapshot times do not drift.
        """
        state = self.init_state(U1)
        mass0 = self.total_mass(state.U)
        traj = Trajectory(label=self.label, grid=self.grid, mass_weight=self.mass_weight)
        traj.maxima = state.U.max(axis=0) if state.U.size else np.zeros(self.k.n_max)
        traj.trace_max = self._trace_max(state.U)
        self._record_snapshot(traj, state)
        traj.audit.append(MassAuditRow(step=0, t=0.0, total_mass=mass0, injected=0.0, lost=0.0, residual=0.0))

        level = 0
        for base in range(1, self.n_base_steps + 1):
            ticks = 0
            while ticks < 2 ** level:
                dt = self.dt / 2 ** level
                while not self.stable_dt(state.U, dt):
                    level += 1
                    ticks *= 2
                    dt = self.dt / 2 ** level
                    logger.warning("Positivity bound failed at t=%.6g; halving dt to %.3e", state.t, dt)
                    if level > MAX_HALVINGS:
                        raise NumericalFailure("dt underflow while enforcing the positivity bound", step=state.step)
                ticks += 1
                t_new = self.dt * (base - 1 + ticks / 2 ** level) if ticks < 2 ** level else self.dt * base
                state = self.step(state, dt, t_new)
                self._audit(traj, state, mass0)
                np.maximum(traj.maxima, state.U.max(axis=0), out=traj.maxima)
                traj.trace_max = max(traj.trace_max, self._trace_max(state.U))

            if base % self.snapshot_stride == 0 or base == self.n_base_steps:
                self._record_snapshot(traj, state)

        traj.steps = state.step
        traj.dt_final = self.dt / 2 ** level
        traj.cg_iterations = self._cg_iterations
        return traj

    def _trace_max(self, U: np.ndarray) -> float:
        adjacent = self.grid.gamma_adjacent
        return float(U[adjacent, 0].max()) if len(adjacent) else 0.0

    def _audit(self, traj: Trajectory, state: SpeciesState, mass0: float) -> None:
        total = self.total_mass(state.U)
        expected = mass0 + state.injected - state.lost
        residual = relative_residual(total, expected, mass0 + state.injected)
        traj.audit.append(MassAuditRow(
            step=state.step, t=state.t, total_mass=total,
            injected=state.injected, lost=state.lost, residual=residual,
        ))
        if residual > self.audit_tol:
            raise NumericalFailure(
                f"Mass audit failed: total {total:.12e} vs expected {expected:.12e}, residual {residual:.3e}",
                step=state.step,
            )

    def _record_snapshot(self, traj: Trajectory, state: SpeciesState) -> None:
        if effective_diffusivity_violations(self.k, state.U):
            raise NumericalFailure("Effective diffusivity left [min d, max d]", step=state.step)
        traj.times.append(state.t)
        traj.snapshots.append(state.U.copy())
        logger.info(
            "%s t=%.4g mass=%.10g injected=%.4g lost=%.4g",
            self.label, state.t, self.total_mass(state.U), state.injected, state.lost,
        )
