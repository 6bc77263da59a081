"""
Tests for the homogenized solver and its coefficients.
"""

import dataclasses

import numpy as np
import pytest

from src.cellproblem import solve_cell_problem
from src.geometry import build_reference_cell, build_uniform_grid
from src.kernels import build_builtin_kernels
from src.models import ExpressionFactor, PsiConfig
from src.solvers.macro import MacroSolver, build_homogenized_coefficients, run_macro
from src.solvers.micro import run_micro
from src.source import BoundarySource
from src.zerod import run_zerod


@pytest.fixture(scope="module")
def cell_solution():
    return solve_cell_problem(build_reference_cell(2, 0.25, 8), radius=0.25)


@pytest.fixture
def unit_p_psi():
    return PsiConfig(p=ExpressionFactor(kind="constant", coefficients=[1.0]))


class TestHomogenizedCoefficients:
    """A, theta and the Gamma-integrated source."""

    def test_constant_q_integrates_to_interface_area(self, cell_solution, unit_p_psi):
        coeffs = build_homogenized_coefficients(cell_solution, BoundarySource(unit_p_psi))
        assert coeffs.Q_ref == pytest.approx(cell_solution.cell.gamma_area, rel=1e-12)
        assert coeffs.theta == cell_solution.theta
        np.testing.assert_array_equal(coeffs.A, cell_solution.A)

    def test_source_vanishes_at_time_zero(self, cell_solution, unit_p_psi):
        coeffs = build_homogenized_coefficients(cell_solution, BoundarySource(unit_p_psi))
        x = np.array([[0.3, 0.7]])
        assert coeffs.gamma_source(0.0, x)[0] == 0.0
        assert coeffs.gamma_source(0.5, x)[0] == pytest.approx(0.5 * coeffs.Q_ref)

    def test_rejects_source_active_at_time_zero(self, cell_solution):
        psi = PsiConfig(g=ExpressionFactor(kind="constant", coefficients=[1.0]))
        with pytest.raises(ValueError, match="g\\(0\\)"):
            build_homogenized_coefficients(cell_solution, BoundarySource(psi))

    def test_oscillating_q_cancels(self, cell_solution):
        psi = PsiConfig(q=ExpressionFactor(kind="sine", wavenumber=2 * np.pi, axis=0))
        coeffs = build_homogenized_coefficients(cell_solution, BoundarySource(psi))
        # sin(2 pi y) is odd about the center of a mirror-symmetric hole
        assert abs(coeffs.Q_ref) < 1e-12


class TestMacroRun:
    """Runs on the unperforated grid."""

    def test_uniform_state_is_preserved(self, make_config, zero_psi, no_reaction_kernels, cell_solution):
        config = make_config(psi=zero_psi, n_max=4, U1=0.3)
        coeffs = build_homogenized_coefficients(cell_solution, BoundarySource(zero_psi))
        traj = run_macro(config, coeffs, kernels=no_reaction_kernels(4))
        np.testing.assert_allclose(traj.final[:, 0], 0.3, rtol=1e-12)
        assert traj.mass_weight == cell_solution.theta

    def test_injected_mass_matches_micro(self, make_config, unit_p_psi, no_reaction_kernels, cell_solution):
        config = make_config(psi=unit_p_psi, n_max=4, U1=0.0)
        coeffs = build_homogenized_coefficients(cell_solution, BoundarySource(unit_p_psi))
        macro = run_macro(config, coeffs, kernels=no_reaction_kernels(4))
        micro = run_micro(config, kernels=no_reaction_kernels(4))
        assert macro.audit[-1].injected == pytest.approx(micro.audit[-1].injected, rel=1e-12)
        assert macro.max_audit_residual <= 1e-8

    def test_theta_scaling_leaves_fields_unchanged(self, make_config, cell_solution):
        config = make_config()
        coeffs = build_homogenized_coefficients(cell_solution, BoundarySource(config.psi))
        scaled = dataclasses.replace(coeffs, A=2.0 * coeffs.A, theta=2.0 * coeffs.theta, Q_ref=2.0 * coeffs.Q_ref)
        base = run_macro(config, coeffs)
        other = run_macro(config, scaled)
        np.testing.assert_allclose(other.final, base.final, rtol=1e-13, atol=1e-16)
        assert other.audit[-1].total_mass == pytest.approx(2.0 * base.audit[-1].total_mass, rel=1e-13)

    def test_degenerate_cell_matches_micro_bitwise(self, make_config):
        config = make_config(radius=0.0, h_macro=1.0 / 32.0)
        solution = solve_cell_problem(build_reference_cell(2, 0.0, 8))
        coeffs = build_homogenized_coefficients(solution, BoundarySource(config.psi))
        assert coeffs.Q_ref == 0.0
        micro = run_micro(config)
        macro = run_macro(config, coeffs)
        assert micro.times == macro.times
        for a, b in zip(micro.snapshots, macro.snapshots):
            np.testing.assert_array_equal(a, b)

    def test_rejects_nonpositive_theta(self, make_config, cell_solution, no_reaction_kernels):
        config = make_config()
        coeffs = build_homogenized_coefficients(cell_solution, BoundarySource(config.psi))
        with pytest.raises(ValueError, match="theta"):
            MacroSolver(
                build_uniform_grid(2, 1.0, 0.125), no_reaction_kernels(4),
                dataclasses.replace(coeffs, theta=0.0), dt=5e-3, T=0.02,
            )

    def test_uniform_data_follows_zero_dimensional_stepper(self, make_config, zero_psi, cell_solution):
        config = make_config(psi=zero_psi, U1=0.4)
        coeffs = build_homogenized_coefficients(cell_solution, BoundarySource(zero_psi))
        traj = run_macro(config, coeffs)
        k = build_builtin_kernels(config.kernel, config.n_max)
        zerod = run_zerod(k, N0=0.4, T=config.T, dt=config.dt, samples=5)
        np.testing.assert_allclose(traj.final.sum(axis=1), zerod.N[-1], rtol=1e-12)
        assert np.ptp(traj.final, axis=0).max() <= 1e-15

    def test_rotating_the_source_rotates_the_solution(self, make_config, cell_solution):
        A = cell_solution.A
        diag = 0.5 * (A[0, 0] + A[1, 1])
        swap_symmetric = np.array([[diag, A[0, 1]], [A[0, 1], diag]])
        finals = []
        for axis in (0, 1):
            psi = PsiConfig(p=ExpressionFactor(kind="sine", wavenumber=np.pi, axis=axis))
            config = make_config(psi=psi, tol=1e-12)
            coeffs = build_homogenized_coefficients(cell_solution, BoundarySource(psi))
            traj = run_macro(config, dataclasses.replace(coeffs, A=swap_symmetric))
            finals.append(traj.grid.to_field(traj.final))

        along_x, along_y = finals
        assert np.abs(along_x - along_x.transpose(1, 0, 2)).max() > 1e-6
        np.testing.assert_allclose(along_y, along_x.transpose(1, 0, 2), rtol=0, atol=1e-9 * np.abs(along_x).max())
