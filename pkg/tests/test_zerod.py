"""
Tests for the spatially uniform benchmark.
"""

import numpy as np
import pytest

from src.kernels import build_builtin_kernels
from src.models import KernelConfig
from src.zerod import constant_kernel_number, reaction_rhs, reference_solution, run_zerod


@pytest.fixture(scope="module")
def constant_pure_coagulation():
    return build_builtin_kernels(KernelConfig(family="constant", a0=1.0, fragmentation="none"), 60)


class TestClosedForm:
    def test_number_decay(self):
        assert constant_kernel_number(1.0, 1.0, 2.0) == pytest.approx(0.5)
        np.testing.assert_allclose(constant_kernel_number(2.0, 0.5, [0.0, 2.0]), [0.5, 0.25])


class TestRunZeroD:
    """Explicit stepper against the closed form and an implicit reference."""

    def test_matches_closed_form(self, constant_pure_coagulation):
        result = run_zerod(constant_pure_coagulation, N0=1.0, T=2.0, dt=1e-3, samples=21)
        assert result.report.N_closed_form == pytest.approx(0.5)
        assert result.report.relative_error < 5e-4
        assert len(result.times) == 21
        assert result.times[-1] == pytest.approx(2.0)

    def test_first_order_in_dt(self, constant_pure_coagulation):
        coarse = run_zerod(constant_pure_coagulation, N0=1.0, T=1.0, dt=1e-2).report.relative_error
        fine = run_zerod(constant_pure_coagulation, N0=1.0, T=1.0, dt=5e-3).report.relative_error
        assert fine < coarse
        assert coarse / fine == pytest.approx(2.0, rel=0.1)

    def test_mass_ledger(self, constant_pure_coagulation):
        result = run_zerod(constant_pure_coagulation, N0=1.0, T=2.0, dt=1e-3)
        report = result.report
        assert report.mass_final + report.mass_lost == pytest.approx(1.0, rel=1e-12)
        assert np.all(np.diff(result.mass) <= 1e-15)

    def test_fragmentation_has_no_closed_form(self):
        k = build_builtin_kernels(KernelConfig(), 20)
        result = run_zerod(k, N0=1.0, T=0.5, dt=1e-3)
        assert result.N_closed_form is None
        assert result.report.relative_error is None

    def test_agrees_with_implicit_reference(self):
        k = build_builtin_kernels(KernelConfig(family="sum_power", zeta=0.5), 20)
        result = run_zerod(k, N0=1.0, T=0.5, dt=1e-4, samples=6)
        u0 = np.zeros(20)
        u0[0] = 1.0
        ref = reference_solution(k, u0, result.times[-1], result.times)
        assert ref.success
        np.testing.assert_allclose(result.N, ref.y.sum(axis=0), rtol=1e-3)

    def test_rhs_conserves_mass_without_truncation(self):
        k = build_builtin_kernels(KernelConfig(), 30)
        u = np.zeros(30)
        u[:3] = [1.0, 0.5, 0.2]
        # Largest product is size 6, far below n_max
        assert np.dot(k.sizes, reaction_rhs(k, u)) == pytest.approx(0.0, abs=1e-13)

    def test_rejects_horizon_shorter_than_step(self, constant_pure_coagulation):
        with pytest.raises(ValueError, match="at least one step"):
            run_zerod(constant_pure_coagulation, N0=1.0, T=1e-4, dt=1e-3)
