"""Shared fixtures: small, fast run configurations and zero-reaction kernels."""

import dataclasses

import numpy as np
import pytest

from src.kernels import build_builtin_kernels
from src.models import ExpressionFactor, KernelConfig, PsiConfig, RunConfig

SMALL_DEFAULTS = dict(
    schema_version=1,
    epsilon=0.25,
    epsilons=[0.5, 0.25],
    m_cell=8,
    h_macro=1.0 / 16.0,
    n_max=6,
    T=0.02,
    dt=5e-3,
    snapshot_stride=2,
    write_snapshots=False,
)


@pytest.fixture
def make_config():
    """Factory for a small RunConfig; keyword arguments override the defaults."""

    def _make(**overrides) -> RunConfig:
        data = dict(SMALL_DEFAULTS)
        data.update(overrides)
        return RunConfig(**data)

    return _make


@pytest.fixture
def zero_psi():
    """Boundary source that vanishes identically."""
    return PsiConfig(g=ExpressionFactor(kind="polynomial", coefficients=[0.0]))


@pytest.fixture
def no_reaction_kernels():
    """Kernel tables with a = 0 and B = 0, keeping a valid daughter distribution."""

    def _make(n_max: int = 4, d0: float = 1.0):
        k = build_builtin_kernels(KernelConfig(fragmentation="none", d0=d0), n_max)
        return dataclasses.replace(k, a=np.zeros_like(k.a), B=np.zeros_like(k.B))

    return _make
