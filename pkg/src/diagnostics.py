"""
Run-time sanity monitors: L-infinity bound recursion, effective diffusivity
bounds of the mass density and the relative mass-audit residual.
"""

import logging
from typing import List

import numpy as np

from .kernels import KernelSet

logger = logging.getLogger(__name__)

DENSITY_RTOL = 1e-12
LINF_SPECIES = 8


def linf_bounds(k: KernelSet, U1: float, trace_max: float) -> np.ndarray:
    """
    Bounds K_i on max_x u_i.

    K_1 = |U1| + max u_1 on Gamma + gamma_1 + 1, then
    K_i = 1 + sum_{j<i} a(j, i-j) K_j K_{i-j} / (B_i + a(i, i)) + gamma_i.
    A zero denominator gives +inf.
    """
    n = k.n_max
    K = np.empty(n)
    K[0] = abs(U1) + trace_max + k.gamma[0] + 1.0
    for i in range(2, n + 1):
        j = np.arange(1, i)
        with np.errstate(invalid="ignore", over="ignore"):
            gain = float(np.sum(k.a[j - 1, i - j - 1] * K[j - 1] * K[i - j - 1]))
        denominator = k.B[i - 1] + k.a[i - 1, i - 1]
        if denominator <= 0 or not np.isfinite(gain):
            K[i - 1] = np.inf
        else:
            K[i - 1] = 1.0 + gain / denominator + k.gamma[i - 1]
    return K


def check_linf(maxima: np.ndarray, K: np.ndarray, headroom: float, species: int = LINF_SPECIES) -> List[int]:
    """1-based species whose observed maximum exceeds K_i (1 + headroom)."""
    limit = min(species, len(K))
    bad = np.flatnonzero(maxima[:limit] > K[:limit] * (1.0 + headroom))
    for i in bad:
        logger.warning("L-inf monitor: max u_%d = %.4g > K_%d = %.4g", i + 1, maxima[i], i + 1, K[i])
    return [int(i) + 1 for i in bad]


def effective_diffusivity_violations(k: KernelSet, U: np.ndarray) -> int:
    """Cells where (sum i d_i u_i)/rho leaves [min d, max d] while rho > 0."""
    rho = U @ k.sizes
    flux = U @ (k.sizes * k.d)
    active = rho > 0
    low = flux[active] < k.D0 * rho[active] * (1.0 - DENSITY_RTOL)
    high = flux[active] > k.D1 * rho[active] * (1.0 + DENSITY_RTOL)
    return int(np.count_nonzero(low | high))


def relative_residual(total: float, expected: float, scale: float) -> float:
    return abs(total - expected) / max(scale, np.finfo(float).tiny)
