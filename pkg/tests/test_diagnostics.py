"""
Tests for the run-time monitors.
"""

import dataclasses

import numpy as np
import pytest

from src.diagnostics import check_linf, effective_diffusivity_violations, linf_bounds, relative_residual
from src.kernels import GAMMA_FLOOR, build_builtin_kernels
from src.models import KernelConfig


class TestLinfBounds:
    """K_i recursion."""

    def test_recursion_values(self):
        k = build_builtin_kernels(KernelConfig(family="constant", a0=1.0, b=0.5), 3)
        K = linf_bounds(k, U1=0.1, trace_max=0.2)
        K1 = 0.1 + 0.2 + 1.0 + 1.0
        K2 = 1.0 + K1 * K1 / (0.5 + 1.0) + 1.0
        K3 = 1.0 + 2 * K1 * K2 / (1.0 + 1.0) + GAMMA_FLOOR
        np.testing.assert_allclose(K, [K1, K2, K3], rtol=1e-14)

    def test_zero_denominator_is_unbounded(self, no_reaction_kernels):
        K = linf_bounds(no_reaction_kernels(4), U1=0.5, trace_max=0.0)
        assert K[0] == pytest.approx(1.5)
        assert np.all(np.isinf(K[1:]))

    def test_check_reports_one_based_species(self):
        K = np.array([1.0, 2.0, 3.0])
        maxima = np.array([1.05, 2.5, 0.0])
        assert check_linf(maxima, K, headroom=0.1) == [2]
        assert check_linf(maxima, K, headroom=0.0) == [1, 2]

    def test_check_looks_at_leading_species_only(self):
        K = np.ones(12)
        maxima = np.zeros(12)
        maxima[10] = 5.0
        assert check_linf(maxima, K, headroom=0.0) == []
        assert check_linf(maxima, K, headroom=0.0, species=12) == [11]


class TestDensityBounds:
    """(sum i d_i u_i) / rho stays inside [D0, D1]."""

    @pytest.fixture
    def kernels(self):
        return build_builtin_kernels(KernelConfig(diffusion="list", d_list=[1.0, 0.5]), 2)

    def test_within_bounds(self, kernels):
        U = np.array([[1.0, 1.0], [0.0, 0.0], [0.0, 2.0]])
        assert effective_diffusivity_violations(kernels, U) == 0

    def test_detects_out_of_range_cells(self, kernels):
        tight = dataclasses.replace(kernels, D0=0.8)
        U = np.array([[1.0, 1.0], [1.0, 0.0]])
        assert effective_diffusivity_violations(tight, U) == 1


class TestRelativeResidual:
    def test_scaled_difference(self):
        assert relative_residual(1.5, 1.0, 2.0) == pytest.approx(0.25)

    def test_zero_scale_does_not_divide_by_zero(self):
        assert relative_residual(0.0, 0.0, 0.0) == 0.0
