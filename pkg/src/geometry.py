"""
Voxelized periodically perforated domains.

A voxel is solid iff its center lies strictly inside a hole of radius r
(in cell units) centered in its epsilon-cell, and the closed hole lies
inside the domain. Faces between a fluid and a solid voxel form Gamma.
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage

from .errors import GeometryError

logger = logging.getLogger(__name__)

CONFORMITY_RTOL = 1e-9
MIN_CELL_RESOLUTION = 8


def _integer_ratio(numerator: float, denominator: float, name: str) -> int:
    ratio = numerator / denominator
    n = int(round(ratio))
    if n < 1 or abs(n * denominator - numerator) > CONFORMITY_RTOL * numerator:
        raise GeometryError(f"{name}: {numerator!r} is not an integer multiple of {denominator!r}")
    return n


@dataclass(frozen=True)
class DomainSpec:
    """Omega = [0, L]^dim perforated by centered balls of radius r in each epsilon-cell."""

    dim: int
    L: float
    epsilon: float
    radius: float
    m_cell: int

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise GeometryError(f"dim must be 2 or 3, got {self.dim}")
        if not 0 < self.epsilon < 1:
            raise GeometryError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if not 0 <= self.radius < 0.5:
            raise GeometryError(f"hole radius must satisfy 0 <= r < 1/2, got {self.radius}")
        if self.m_cell < MIN_CELL_RESOLUTION:
            raise GeometryError(f"m_cell must be >= {MIN_CELL_RESOLUTION}, got {self.m_cell}")
        _integer_ratio(self.L, self.epsilon, "epsilon")

    @property
    def h(self) -> float:
        return self.epsilon / self.m_cell

    @property
    def cells_per_axis(self) -> int:
        return _integer_ratio(self.L, self.epsilon, "epsilon")

    @property
    def voxels_per_axis(self) -> int:
        return self.cells_per_axis * self.m_cell


@dataclass(frozen=True, eq=False)
class FaceSet:
    """Faces owned by a fluid voxel; sign is +1 when the face lies on the voxel's upper side."""

    voxel: np.ndarray
    axis: np.ndarray
    sign: np.ndarray
    center: np.ndarray
    hole: np.ndarray

    def __len__(self) -> int:
        return len(self.voxel)

    @classmethod
    def empty(cls, dim: int) -> "FaceSet":
        return cls(
            voxel=np.zeros(0, dtype=np.int64),
            axis=np.zeros(0, dtype=np.int64),
            sign=np.zeros(0, dtype=np.int64),
            center=np.zeros((0, dim)),
            hole=np.zeros(0, dtype=np.int64),
        )


@dataclass(frozen=True, eq=False)
class PerforatedGrid:
    """
    Immutable voxel lattice with fluid mask and face sets.

    Fields are stored over fluid voxels in C order of the full lattice.
    """

    dim: int
    L: float
    h: float
    shape: Tuple[int, ...]
    fluid: np.ndarray
    gamma_faces: FaceSet
    outer_faces: FaceSet
    periodic: bool = False
    epsilon: Optional[float] = None
    m_cell: Optional[int] = None
    n_holes: int = 0

    @cached_property
    def fluid_coords(self) -> np.ndarray:
        """Integer lattice coordinates of fluid voxels, shape (n_fluid, dim)."""
        return np.argwhere(self.fluid)

    @cached_property
    def fluid_index(self) -> np.ndarray:
        """Lattice-shaped map to fluid indices; -1 on solid voxels."""
        index = np.full(self.shape, -1, dtype=np.int64)
        index[self.fluid] = np.arange(self.n_fluid)
        return index

    @cached_property
    def centers(self) -> np.ndarray:
        return (self.fluid_coords + 0.5) * self.h

    @cached_property
    def gamma_adjacent(self) -> np.ndarray:
        """Fluid voxels owning at least one Gamma face."""
        return np.unique(self.gamma_faces.voxel)

    @property
    def n_fluid(self) -> int:
        return int(np.count_nonzero(self.fluid))

    @property
    def voxel_volume(self) -> float:
        return self.h ** self.dim

    @property
    def face_measure(self) -> float:
        return self.h ** (self.dim - 1)

    @property
    def fluid_volume(self) -> float:
        return self.n_fluid * self.voxel_volume

    @property
    def solid_volume(self) -> float:
        return (self.fluid.size - self.n_fluid) * self.voxel_volume

    @property
    def gamma_area(self) -> float:
        return len(self.gamma_faces) * self.face_measure

    @property
    def theta(self) -> float:
        """Fluid volume fraction."""
        return self.n_fluid / self.fluid.size

    def to_field(self, values: np.ndarray) -> np.ndarray:
        """Scatter fluid values onto the full lattice, zero on solid voxels."""
        full = np.zeros(self.shape + values.shape[1:])
        full[self.fluid] = values
        return full


def _solid_mask(n_cells: int, m_cell: int, dim: int, radius: float, hole_inside: np.ndarray) -> np.ndarray:
    local = (np.arange(m_cell) + 0.5) / m_cell - 0.5
    dist2 = np.zeros((m_cell,) * dim)
    for axis in range(dim):
        shape = [1] * dim
        shape[axis] = m_cell
        dist2 = dist2 + local.reshape(shape) ** 2
    cell_solid = dist2 < radius * radius
    # Tile the cell pattern, then drop holes outside the security zone
    solid = np.tile(cell_solid, (n_cells,) * dim)
    if not hole_inside.all():
        keep = np.kron(hole_inside, np.ones((m_cell,) * dim, dtype=bool)).astype(bool)
        solid &= keep
    return solid


def _hole_ids(shape: Tuple[int, ...], m_cell: int) -> np.ndarray:
    n_cells = tuple(s // m_cell for s in shape)
    coords = np.indices(shape) // m_cell
    return np.ravel_multi_index(tuple(coords), n_cells)


def _interface_faces(
    fluid: np.ndarray, h: float, periodic: bool, hole_id: np.ndarray, fluid_index: np.ndarray
) -> FaceSet:
    """Collect faces between a fluid voxel and a solid neighbor."""
    dim = fluid.ndim
    voxels, axes, signs, centers, holes = [], [], [], [], []

    for axis in range(dim):
        for sign in (1, -1):
            if periodic:
                neighbor = np.roll(fluid, -sign, axis=axis)
                neighbor_hole = np.roll(hole_id, -sign, axis=axis)
                owner = fluid & ~neighbor
            else:
                # Outer boundary faces are never Gamma
                neighbor = np.ones_like(fluid)
                neighbor_hole = np.zeros_like(hole_id)
                inner = [slice(None)] * dim
                other = [slice(None)] * dim
                if sign == 1:
                    inner[axis], other[axis] = slice(0, -1), slice(1, None)
                else:
                    inner[axis], other[axis] = slice(1, None), slice(0, -1)
                neighbor[tuple(inner)] = fluid[tuple(other)]
                neighbor_hole[tuple(inner)] = hole_id[tuple(other)]
                owner = fluid & ~neighbor

            coords = np.argwhere(owner)
            if not len(coords):
                continue
            center = (coords + 0.5) * h
            center[:, axis] += 0.5 * sign * h
            voxels.append(fluid_index[owner])
            axes.append(np.full(len(coords), axis))
            signs.append(np.full(len(coords), sign))
            centers.append(center)
            holes.append(neighbor_hole[owner])

    if not voxels:
        return FaceSet.empty(dim)
    return FaceSet(
        voxel=np.concatenate(voxels),
        axis=np.concatenate(axes),
        sign=np.concatenate(signs),
        center=np.concatenate(centers),
        hole=np.concatenate(holes),
    )


def _outer_faces(fluid: np.ndarray, h: float, fluid_index: np.ndarray) -> FaceSet:
    dim = fluid.ndim
    voxels, axes, signs, centers = [], [], [], []
    for axis in range(dim):
        for sign in (1, -1):
            edge = [slice(None)] * dim
            edge[axis] = -1 if sign == 1 else 0
            layer = np.zeros_like(fluid)
            layer[tuple(edge)] = True
            owner = fluid & layer
            coords = np.argwhere(owner)
            center = (coords + 0.5) * h
            center[:, axis] += 0.5 * sign * h
            voxels.append(fluid_index[owner])
            axes.append(np.full(len(coords), axis))
            signs.append(np.full(len(coords), sign))
            centers.append(center)
    voxel = np.concatenate(voxels)
    return FaceSet(
        voxel=voxel,
        axis=np.concatenate(axes),
        sign=np.concatenate(signs),
        center=np.concatenate(centers),
        hole=np.full(len(voxel), -1),
    )


def count_fluid_components(fluid: np.ndarray, periodic: bool = False) -> int:
    """Number of face-connected fluid components, with wrap-around when periodic."""
    if not fluid.any():
        return 0
    structure = ndimage.generate_binary_structure(fluid.ndim, 1)
    labels, count = ndimage.label(fluid, structure=structure)
    if not periodic or count == 1:
        return count

    parent = list(range(count + 1))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for axis in range(fluid.ndim):
        first = np.take(labels, 0, axis=axis)
        last = np.take(labels, -1, axis=axis)
        for a, b in zip(first[(first > 0) & (last > 0)], last[(first > 0) & (last > 0)]):
            ra, rb = find(int(a)), find(int(b))
            if ra != rb:
                parent[ra] = rb
    return len({find(label) for label in range(1, count + 1)})


def _finish_grid(
    fluid: np.ndarray,
    dim: int,
    L: float,
    h: float,
    periodic: bool,
    hole_id: np.ndarray,
    epsilon: Optional[float],
    m_cell: Optional[int],
) -> PerforatedGrid:
    components = count_fluid_components(fluid, periodic=periodic)
    if components != 1:
        raise GeometryError(f"Fluid region must be connected, found {components} components")

    fluid_index = np.full(fluid.shape, -1, dtype=np.int64)
    fluid_index[fluid] = np.arange(int(np.count_nonzero(fluid)))
    gamma = _interface_faces(fluid, h, periodic, hole_id, fluid_index)
    outer = FaceSet.empty(dim) if periodic else _outer_faces(fluid, h, fluid_index)

    return PerforatedGrid(
        dim=dim,
        L=L,
        h=h,
        shape=fluid.shape,
        fluid=fluid,
        gamma_faces=gamma,
        outer_faces=outer,
        periodic=periodic,
        epsilon=epsilon,
        m_cell=m_cell,
        n_holes=int(len(np.unique(gamma.hole))),
    )


def build_perforated_grid(spec: DomainSpec) -> PerforatedGrid:
    """
    Voxelize Omega_eps.

    Raises:
        GeometryError: non-conforming (L, epsilon, h), r >= 1/2 or disconnected fluid
    """
    n_cells = spec.cells_per_axis
    m = spec.m_cell
    dim = spec.dim

    # Security zone: keep only holes whose closure lies inside Omega
    k = np.indices((n_cells,) * dim)
    low = (k + 0.5 - spec.radius) * spec.epsilon
    high = (k + 0.5 + spec.radius) * spec.epsilon
    hole_inside = np.all((low >= 0) & (high <= spec.L), axis=0)

    fluid = ~_solid_mask(n_cells, m, dim, spec.radius, hole_inside)
    hole_id = _hole_ids(fluid.shape, m)
    grid = _finish_grid(fluid, dim, spec.L, spec.h, False, hole_id, spec.epsilon, m)

    logger.debug(
        "Perforated grid dim=%d eps=%g m=%d: %d fluid voxels, %d Gamma faces, %d holes",
        dim, spec.epsilon, m, grid.n_fluid, len(grid.gamma_faces), grid.n_holes,
    )
    return grid


def build_reference_cell(dim: int, radius: float, m_cell: int) -> PerforatedGrid:
    """Periodic reference cell Y* = Y minus the hole, with spacing 1/m_cell."""
    if dim not in (2, 3):
        raise GeometryError(f"dim must be 2 or 3, got {dim}")
    if not 0 <= radius < 0.5:
        raise GeometryError(f"hole radius must satisfy 0 <= r < 1/2, got {radius}")
    if m_cell < MIN_CELL_RESOLUTION:
        raise GeometryError(f"m_cell must be >= {MIN_CELL_RESOLUTION}, got {m_cell}")

    fluid = ~_solid_mask(1, m_cell, dim, radius, np.ones((1,) * dim, dtype=bool))
    hole_id = np.zeros(fluid.shape, dtype=np.int64)
    return _finish_grid(fluid, dim, 1.0, 1.0 / m_cell, True, hole_id, None, m_cell)


def build_uniform_grid(dim: int, L: float, h: float) -> PerforatedGrid:
    """Unperforated grid on [0, L]^dim for the homogenized problem."""
    if dim not in (2, 3):
        raise GeometryError(f"dim must be 2 or 3, got {dim}")
    n = _integer_ratio(L, h, "h_macro")
    fluid = np.ones((n,) * dim, dtype=bool)
    hole_id = np.zeros(fluid.shape, dtype=np.int64)
    return _finish_grid(fluid, dim, L, L / n, False, hole_id, None, None)


def gamma_measure_limit_check(specs: Sequence[DomainSpec]) -> List[Tuple[float, float]]:
    """Table of (epsilon, epsilon * |Gamma_eps|) for a refinement sequence."""
    table = []
    for spec in specs:
        grid = build_perforated_grid(spec)
        table.append((spec.epsilon, spec.epsilon * grid.gamma_area))
    return table
