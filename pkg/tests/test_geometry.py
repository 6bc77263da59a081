"""
Tests for voxelized perforated domains, the reference cell and uniform grids.
"""

import numpy as np
import pytest

from src.errors import GeometryError
from src.geometry import (
    DomainSpec,
    build_perforated_grid,
    build_reference_cell,
    build_uniform_grid,
    count_fluid_components,
    gamma_measure_limit_check,
)


class TestDomainSpec:
    """Parameter checks on the perforated domain."""

    def test_derived_sizes(self):
        spec = DomainSpec(dim=2, L=1.0, epsilon=0.25, radius=0.25, m_cell=8)
        assert spec.cells_per_axis == 4
        assert spec.voxels_per_axis == 32
        assert spec.h == pytest.approx(1.0 / 32.0)

    @pytest.mark.parametrize(
        "overrides",
        [
            {"epsilon": 0.3},
            {"radius": 0.5},
            {"radius": -0.1},
            {"m_cell": 4},
            {"dim": 1},
            {"epsilon": 1.0},
        ],
    )
    def test_rejects_bad_parameters(self, overrides):
        params = dict(dim=2, L=1.0, epsilon=0.25, radius=0.25, m_cell=8)
        params.update(overrides)
        with pytest.raises(GeometryError):
            DomainSpec(**params)


class TestPerforatedGrid:
    """Voxelization of Omega_eps."""

    @pytest.fixture
    def grid(self):
        return build_perforated_grid(DomainSpec(dim=2, L=1.0, epsilon=0.25, radius=0.25, m_cell=16))

    def test_one_hole_per_cell(self, grid):
        assert grid.n_holes == 16
        assert grid.shape == (64, 64)

    def test_volumes_add_up(self, grid):
        assert grid.fluid_volume + grid.solid_volume == pytest.approx(1.0, rel=1e-12)
        assert 0 < grid.theta < 1

    def test_outer_faces_are_not_gamma(self, grid):
        # Cell edges stay fluid, so every outer face is a fluid face
        assert len(grid.outer_faces) == 4 * 64
        centers = grid.gamma_faces.center
        assert np.all((centers > 0) & (centers < 1))

    def test_gamma_faces_separate_fluid_from_solid(self, grid):
        faces = grid.gamma_faces
        owners = grid.fluid_coords[faces.voxel]
        neighbors = owners.copy()
        neighbors[np.arange(len(faces)), faces.axis] += faces.sign
        assert np.all(grid.fluid[tuple(owners.T)])
        assert not np.any(grid.fluid[tuple(neighbors.T)])

    def test_gamma_faces_know_their_hole(self, grid):
        faces = grid.gamma_faces
        cells = np.floor(faces.center / grid.epsilon).astype(int)
        expected = np.ravel_multi_index(tuple(cells.T), (4, 4))
        np.testing.assert_array_equal(faces.hole, expected)

    def test_gamma_faces_hug_the_hole(self, grid):
        faces = grid.gamma_faces
        hole_centers = (np.floor(faces.center / grid.epsilon) + 0.5) * grid.epsilon
        dist = np.linalg.norm(faces.center - hole_centers, axis=1)
        r = 0.25 * grid.epsilon
        assert np.all(np.abs(dist - r) <= 1.5 * grid.h)

    def test_to_field_zeroes_solid_voxels(self, grid):
        full = grid.to_field(np.ones(grid.n_fluid))
        assert full.shape == grid.shape
        assert full.sum() == grid.n_fluid
        assert not full[~grid.fluid].any()

    def test_fluid_index_round_trip(self, grid):
        idx = grid.fluid_index[tuple(grid.fluid_coords.T)]
        np.testing.assert_array_equal(idx, np.arange(grid.n_fluid))
        assert np.all(grid.fluid_index[~grid.fluid] == -1)

    def test_no_hole_is_fully_fluid(self):
        grid = build_perforated_grid(DomainSpec(dim=2, L=1.0, epsilon=0.5, radius=0.0, m_cell=8))
        assert grid.theta == 1.0
        assert len(grid.gamma_faces) == 0
        assert grid.n_holes == 0

    def test_three_dimensional_grid(self):
        grid = build_perforated_grid(DomainSpec(dim=3, L=1.0, epsilon=0.5, radius=0.25, m_cell=8))
        assert grid.shape == (16, 16, 16)
        assert grid.n_holes == 8
        assert len(grid.outer_faces) == 6 * 16 * 16

    def test_disconnected_fluid_raises(self):
        # Holes nearly touching their cell edges leave fluid islands at the cell corners
        with pytest.raises(GeometryError, match="connected"):
            build_perforated_grid(DomainSpec(dim=2, L=1.0, epsilon=0.5, radius=0.49, m_cell=8))


class TestReferenceCell:
    """Periodic reference cell Y*."""

    def test_disk_perimeter(self):
        cell = build_reference_cell(2, 0.25, 64)
        # Orthoconvex digital disk spanning 32 voxels: Manhattan perimeter 8 r
        assert cell.gamma_area == pytest.approx(2.0, rel=1e-14)
        assert cell.n_holes == 1

    def test_solid_fraction_approaches_disk_area(self):
        cell = build_reference_cell(2, 0.25, 64)
        assert cell.solid_volume == pytest.approx(np.pi * 0.25 ** 2, rel=0.03)
        assert cell.theta == pytest.approx(1.0 - cell.solid_volume, rel=1e-12)

    def test_periodic_cell_has_no_outer_faces(self):
        cell = build_reference_cell(3, 0.25, 8)
        assert cell.periodic
        assert len(cell.outer_faces) == 0
        assert cell.L == 1.0

    def test_wrapped_corners_form_one_component(self):
        cell = build_reference_cell(2, 0.49, 8)
        assert count_fluid_components(cell.fluid, periodic=True) == 1

    def test_rejects_coarse_cell(self):
        with pytest.raises(GeometryError):
            build_reference_cell(2, 0.25, 4)


class TestUniformGrid:
    """Unperforated grid for the homogenized problem."""

    def test_uniform_grid(self):
        grid = build_uniform_grid(2, 1.0, 1.0 / 16.0)
        assert grid.shape == (16, 16)
        assert grid.theta == 1.0
        assert len(grid.gamma_faces) == 0
        assert len(grid.outer_faces) == 64

    def test_non_conforming_spacing(self):
        with pytest.raises(GeometryError, match="h_macro"):
            build_uniform_grid(2, 1.0, 0.3)


class TestComponents:
    """Connectivity counting with and without wrap-around."""

    def test_stripes_join_across_the_periodic_edge(self):
        fluid = np.zeros((4, 4), dtype=bool)
        fluid[:, 0] = True
        fluid[:, 3] = True
        assert count_fluid_components(fluid) == 2
        assert count_fluid_components(fluid, periodic=True) == 1

    def test_empty_mask(self):
        assert count_fluid_components(np.zeros((3, 3), dtype=bool)) == 0


class TestGammaMeasure:
    """eps |Gamma_eps| matches the reference-cell interface area."""

    def test_scaled_measure_is_constant(self):
        specs = [DomainSpec(dim=2, L=1.0, epsilon=eps, radius=0.25, m_cell=16) for eps in (0.5, 0.25, 0.125)]
        table = gamma_measure_limit_check(specs)
        cell_area = build_reference_cell(2, 0.25, 16).gamma_area
        assert [eps for eps, _ in table] == [0.5, 0.25, 0.125]
        for _, value in table:
            assert value == pytest.approx(cell_area, rel=1e-12)
