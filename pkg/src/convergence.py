"""
Homogenization convergence harness.

Micro fields are extended by zero into the holes and averaged over each
epsilon-cell; the macro field, sampled at the cell centers, is scaled by
theta. Time integrals use the right-endpoint rule over the snapshots.
"""

import logging
import math
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .cellproblem import CellSolution
from .diagnostics import check_linf, linf_bounds
from .errors import GeometryError
from .geometry import PerforatedGrid
from .kernels import KernelSet
from .models import ConvergenceReport, EpsilonEntry
from .solvers.base import Trajectory

logger = logging.getLogger(__name__)

TIME_ATOL = 1e-12
DUALITY_RATIO_LIMIT = 2.0


def cell_average(U: np.ndarray, grid: PerforatedGrid, epsilon: float) -> np.ndarray:
    """
    Average of the zero-extended field over each epsilon-cell.

    Returns:
        Array of shape (n_cells,) * dim, with a trailing species axis when U is 2-D

    Raises:
        GeometryError: If the grid does not conform to the epsilon-lattice
    """
    m = int(round(epsilon / grid.h))
    n_cells = int(round(grid.L / epsilon))
    if m < 1 or abs(m * grid.h - epsilon) > 1e-9 * epsilon or n_cells * m != grid.shape[0]:
        raise GeometryError(f"Grid with h={grid.h} does not partition into cells of size {epsilon}")

    full = grid.to_field(U)
    trailing = full.shape[grid.dim:]
    blocked_shape: List[int] = []
    for _ in range(grid.dim):
        blocked_shape += [n_cells, m]
    blocks = full.reshape(tuple(blocked_shape) + trailing)
    return blocks.mean(axis=tuple(range(1, 2 * grid.dim, 2)))


def sample_at_cell_centers(U: np.ndarray, grid: PerforatedGrid, epsilon: float) -> np.ndarray:
    """Linear interpolation of a macro field at epsilon-cell centers."""
    axis = (np.arange(grid.shape[0]) + 0.5) * grid.h
    interpolator = RegularGridInterpolator(
        (axis,) * grid.dim, grid.to_field(U), method="linear", bounds_error=False, fill_value=None,
    )
    n_cells = int(round(grid.L / epsilon))
    centers_1d = (np.arange(n_cells) + 0.5) * epsilon
    mesh = np.meshgrid(*([centers_1d] * grid.dim), indexing="ij")
    points = np.stack([c.ravel() for c in mesh], axis=-1)
    values = interpolator(points)
    return values.reshape((n_cells,) * grid.dim + values.shape[1:])


def _time_weights(times: Sequence[float]) -> np.ndarray:
    return np.diff(np.asarray(times, dtype=float))


def _check_times(micro: Trajectory, macro: Trajectory) -> None:
    if len(micro.times) != len(macro.times) or not np.allclose(micro.times, macro.times, rtol=0, atol=TIME_ATOL):
        raise ValueError("Micro and macro snapshot times differ")


def compare(micro: Trajectory, macro: Trajectory, species: Sequence[int]) -> Dict[int, float]:
    """
    L2 space-time error between cell-averaged micro fields and theta * u_i.

    Args:
        micro: perforated-domain trajectory
        macro: homogenized trajectory, mass_weight is theta
        species: 1-based sizes to compare

    Raises:
        ValueError: If the snapshot times differ
    """
    _check_times(micro, macro)

    eps = micro.epsilon if micro.epsilon is not None else micro.grid.epsilon
    columns = [i - 1 for i in species]
    cell_volume = eps ** micro.grid.dim
    weights = _time_weights(micro.times)
    squared = np.zeros(len(columns))

    for s, dt in enumerate(weights, start=1):
        coarse = cell_average(micro.snapshots[s][:, columns], micro.grid, eps)
        target = macro.mass_weight * sample_at_cell_centers(macro.snapshots[s][:, columns], macro.grid, eps)
        diff = (coarse - target).reshape(-1, len(columns))
        squared += dt * cell_volume * np.sum(diff * diff, axis=0)

    return {i: float(math.sqrt(v)) for i, v in zip(species, squared)}


def _macro_value_and_gradient(U: np.ndarray, grid: PerforatedGrid, points: np.ndarray):
    """Linear interpolation of a macro field and its central-difference gradient at points."""
    axis = (np.arange(grid.shape[0]) + 0.5) * grid.h
    full = grid.to_field(U)
    gradients = np.gradient(full, grid.h, axis=tuple(range(grid.dim)))

    def at_points(values: np.ndarray) -> np.ndarray:
        interpolator = RegularGridInterpolator(
            (axis,) * grid.dim, values, method="linear", bounds_error=False, fill_value=None,
        )
        return interpolator(points)

    return at_points(full), np.stack([at_points(g) for g in gradients])


def corrector_weights(grid: PerforatedGrid, cell: CellSolution) -> np.ndarray:
    """
    Correctors w_j(x / eps) on the micro fluid voxels, shape (dim, n_fluid).

    Voxels of unperforated epsilon-cells get zero.

    Raises:
        ValueError: If the reference cell resolution differs from the micro grid's
    """
    m = grid.m_cell
    if m is None or cell.cell.m_cell != m or cell.cell.dim != grid.dim:
        raise ValueError(
            f"Reference cell (dim={cell.cell.dim}, m_cell={cell.cell.m_cell}) does not match "
            f"the micro grid (dim={grid.dim}, m_cell={m})"
        )
    coords = grid.fluid_coords
    ref_index = cell.cell.fluid_index[tuple((coords % m).T)]

    n_cells = grid.shape[0] // m
    blocked: List[int] = []
    for _ in range(grid.dim):
        blocked += [n_cells, m]
    has_hole = ~grid.fluid.reshape(blocked).all(axis=tuple(range(1, 2 * grid.dim, 2)))
    active = has_hole[tuple((coords // m).T)] & (ref_index >= 0)

    return np.where(active, cell.w[:, np.maximum(ref_index, 0)], 0.0)


def corrector_augmented_error(
    micro: Trajectory,
    macro: Trajectory,
    cell: CellSolution,
    species: Sequence[int],
) -> Dict[int, float]:
    """
    L2 space-time error on the fluid voxels between u^eps and u + eps sum_j w_j(x/eps) d_j u.

    Diagnostic only; it takes no part in the pass criteria.

    Raises:
        ValueError: If the snapshot times differ or the cell does not match the grid
    """
    _check_times(micro, macro)

    grid = micro.grid
    eps = micro.epsilon if micro.epsilon is not None else grid.epsilon
    columns = [i - 1 for i in species]
    w = corrector_weights(grid, cell)
    squared = np.zeros(len(columns))

    for s, dt in enumerate(_time_weights(micro.times), start=1):
        value, gradient = _macro_value_and_gradient(macro.snapshots[s][:, columns], macro.grid, grid.centers)
        augmented = value + eps * np.einsum("jp,jpk->pk", w, gradient)
        diff = micro.snapshots[s][:, columns] - augmented
        squared += dt * grid.voxel_volume * np.sum(diff * diff, axis=0)

    return {i: float(math.sqrt(v)) for i, v in zip(species, squared)}


def duality_diagnostic(traj: Trajectory, sizes: np.ndarray) -> float:
    """Space-time integral of rho^2 with rho = sum_i i u_i."""
    total = []
    for s, dt in enumerate(_time_weights(traj.times), start=1):
        rho = traj.snapshots[s] @ sizes
        total.append(dt * traj.grid.voxel_volume * math.fsum(rho * rho))
    return math.fsum(total)


def weighted_duality_diagnostic(traj: Trajectory, sizes: np.ndarray, d: np.ndarray) -> float:
    """Space-time integral of (sum_i i d_i u_i)(sum_i i u_i)."""
    total = []
    for s, dt in enumerate(_time_weights(traj.times), start=1):
        U = traj.snapshots[s]
        total.append(dt * traj.grid.voxel_volume * math.fsum((U @ (sizes * d)) * (U @ sizes)))
    return math.fsum(total)


def build_epsilon_entry(
    micro: Trajectory,
    macro: Trajectory,
    kernels: KernelSet,
    species: Sequence[int],
    U1: float,
    headroom: float,
    cell: Optional[CellSolution] = None,
) -> EpsilonEntry:
    """One report row; the corrector-augmented error is added when a cell solution is given."""
    K = linf_bounds(kernels, U1, micro.trace_max)
    return EpsilonEntry(
        epsilon=micro.epsilon,
        errors=compare(micro, macro, species),
        duality=duality_diagnostic(micro, kernels.sizes),
        weighted_duality=weighted_duality_diagnostic(micro, kernels.sizes, kernels.d),
        mass_residual=micro.max_audit_residual,
        steps=micro.steps,
        dt_final=micro.dt_final,
        n_fluid_voxels=micro.grid.n_fluid,
        linf_violations=check_linf(micro.maxima, K, headroom),
        corrector_errors=None if cell is None else corrector_augmented_error(micro, macro, cell, species),
    )


def build_convergence_report(
    entries: List[EpsilonEntry],
    species: Sequence[int],
    *,
    dim: int,
    radius: float,
    m_cell: int,
    n_max: int,
    T: float,
    theta: float,
    A: np.ndarray,
) -> ConvergenceReport:
    """Assemble the report; entries are sorted from coarse to fine epsilon."""
    entries = sorted(entries, key=lambda e: -e.epsilon)
    notes: List[str] = []
    monotone: Dict[int, bool] = {}
    factor_two: Dict[int, bool] = {}

    for i in species:
        errors = [e.errors[i] for e in entries]
        monotone[i] = all(b < a for a, b in zip(errors, errors[1:]))
        factor_two[i] = errors[-1] <= 0.5 * errors[0] if len(errors) > 1 else True
        if not monotone[i]:
            notes.append(
                f"species {i}: error sequence {errors} is not strictly decreasing; "
                "convergence is only guaranteed along a subsequence"
            )

    duality = [e.duality for e in entries]
    low, high = min(duality), max(duality)
    if low > 0:
        ratio = high / low
    else:
        ratio = 1.0 if high == 0 else math.inf

    linf_ok = not any(e.linf_violations for e in entries)
    if not linf_ok:
        notes.append("L-infinity monitor exceeded for at least one epsilon")

    passed = all(monotone.values()) and all(factor_two.values()) and ratio < DUALITY_RATIO_LIMIT and linf_ok
    report = ConvergenceReport(
        dim=dim,
        radius=radius,
        m_cell=m_cell,
        n_max=n_max,
        T=T,
        theta=theta,
        A=[float(v) for v in np.asarray(A).ravel()],
        species=list(species),
        entries=entries,
        monotone=monotone,
        factor_two=factor_two,
        duality_ratio=ratio,
        passed=passed,
        notes=notes,
    )
    logger.info("Convergence report: passed=%s, duality ratio=%.4f", passed, ratio)
    return report
