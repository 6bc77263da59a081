"""
Coagulation, fragmentation and diffusion coefficient families.

Coefficients are tabulated densely up to n_max at construction. Arrays are
0-based: entry [i - 1, j - 1] belongs to cluster sizes (i, j).
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, List, Union

import numpy as np
from scipy import sparse

from .models import KernelConfig, KernelViolation, ValidationReport

logger = logging.getLogger(__name__)

DAUGHTER_MASS_RTOL = 1e-12
BOUND_RTOL = 1e-12
# gamma_m where no breakup feeds size m; any positive value satisfies the bound there
GAMMA_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class KernelSet:
    """Immutable coefficient tables for sizes 1..n_max."""

    n_max: int
    a: np.ndarray
    B: np.ndarray
    beta: np.ndarray
    zeta: float
    C_growth: float
    gamma: np.ndarray
    d: np.ndarray
    D0: float
    D1: float

    @property
    def sizes(self) -> np.ndarray:
        return np.arange(1, self.n_max + 1, dtype=float)

    @cached_property
    def fragmentation_gain(self) -> np.ndarray:
        """G[j, i] = B_j beta_{j,i}; row vector u @ G gives the fragmentation gain."""
        return self.B[:, None] * self.beta

    @cached_property
    def pair_gain(self) -> sparse.csr_matrix:
        """Maps the flattened pair products u_p u_q to coagulation gain at size p + q."""
        n = self.n_max
        p, q = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        target = p + q + 1
        keep = target < n
        rows = (p * n + q)[keep]
        values = 0.5 * self.a[keep]
        return sparse.csr_matrix((values, (rows, target[keep])), shape=(n * n, n))

    @cached_property
    def truncation_weights(self) -> np.ndarray:
        """W[p, q] = (i + j)/2 a_{ij} for pairs whose product exceeds n_max."""
        n = self.n_max
        s = self.sizes[:, None] + self.sizes[None, :]
        return np.where(s > n, 0.5 * s * self.a, 0.0)

    def positivity_rate(self, u: np.ndarray) -> np.ndarray:
        """Per-cell, per-species loss rate sum_j a_ij u_j + B_i."""
        return u @ self.a + self.B


def build_builtin_kernels(config: KernelConfig, n_max: int) -> KernelSet:
    """
    Build a KernelSet from one of the built-in families.

    Args:
        config: family selection and parameters
        n_max: truncation size

    Returns:
        KernelSet: tables satisfying every check of validate_kernels

    Raises:
        ValueError: If n_max < 1, a rate is nonpositive or the family is unknown
    """
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")

    a = _build_coagulation(config, n_max)
    B, beta = _build_fragmentation(config, n_max)
    d = _build_diffusion(config, n_max)

    sizes = np.arange(1, n_max + 1, dtype=float)
    growth = (sizes[:, None] + sizes[None, :]) ** (1.0 - config.zeta)
    C_growth = float(np.max(a / growth))

    kernels = KernelSet(
        n_max=n_max,
        a=a,
        B=B,
        beta=beta,
        zeta=config.zeta,
        C_growth=C_growth,
        gamma=compatibility_constants(a, B, beta),
        d=d,
        D0=float(d.min()),
        D1=float(d.max()),
    )
    logger.debug(
        "Built %s/%s kernels, n_max=%d, C_growth=%.4g",
        config.family, config.fragmentation, n_max, C_growth,
    )
    return kernels


def _build_coagulation(config: KernelConfig, n_max: int) -> np.ndarray:
    """Create the symmetric coagulation table."""
    family = config.family.lower()

    if family == "constant":
        return np.full((n_max, n_max), config.a0)
    elif family == "sum_power":
        sizes = np.arange(1, n_max + 1, dtype=float)
        # i + j is formed once so a[i, j] and a[j, i] come from the same float
        total = sizes[:, None] + sizes[None, :]
        return config.a0 * total ** (1.0 - config.zeta)
    else:
        raise ValueError(f"Unsupported coagulation family: {family}")


def _build_fragmentation(config: KernelConfig, n_max: int):
    """Create total breakup rates B and daughter distribution beta."""
    frag = config.fragmentation.lower()
    B = np.zeros(n_max)
    beta = np.zeros((n_max, n_max))
    # beta always conserves daughter mass, even when nothing breaks up
    for i in range(2, n_max + 1):
        beta[i - 1, : i - 1] = 2.0 / (i - 1)

    if frag == "none":
        return B, beta
    elif frag == "binary_uniform":
        B[1:] = config.b * np.arange(1, n_max, dtype=float)
        return B, beta
    else:
        raise ValueError(f"Unsupported fragmentation family: {frag}")


def _build_diffusion(config: KernelConfig, n_max: int) -> np.ndarray:
    """Create the per-size diffusion constants."""
    profile = config.diffusion.lower()

    if profile == "uniform":
        return np.full(n_max, config.d0)
    elif profile == "list":
        if not config.d_list or len(config.d_list) < n_max:
            raise ValueError(f"d_list must provide at least n_max={n_max} values")
        d = np.asarray(config.d_list[:n_max], dtype=float)
        if np.any(d <= 0):
            raise ValueError("Diffusion constants must be positive")
        return d
    else:
        raise ValueError(f"Unsupported diffusion profile: {profile}")


def compatibility_constants(a: np.ndarray, B: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """
    Smallest gamma_m >= GAMMA_FLOOR with B_j beta_{j,m} <= gamma_m a_{m,j} for all stored j > m.

    0/0 counts as 0; a positive numerator over a zero rate gives +inf.
    """
    n = len(B)
    gamma = np.full(n, GAMMA_FLOOR)
    for m in range(n - 1):
        numerator = B[m + 1:] * beta[m + 1:, m]
        denominator = a[m, m + 1:]
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(
                numerator > 0,
                np.where(denominator > 0, numerator / denominator, np.inf),
                0.0,
            )
        gamma[m] = max(float(ratio.max()), GAMMA_FLOOR)
    return gamma


def validate_kernels(k: KernelSet) -> ValidationReport:
    """Check every kernel constraint over the stored index ranges; never raises."""
    violations: List[KernelViolation] = []
    n = k.n_max
    sizes = k.sizes

    asym = np.argwhere(np.triu(k.a != k.a.T, 1))
    for i, j in asym:
        violations.append(KernelViolation(
            constraint="symmetry_nonnegativity", indices=[int(i) + 1, int(j) + 1],
            detail=f"a({i + 1},{j + 1})={k.a[i, j]!r} != a({j + 1},{i + 1})={k.a[j, i]!r}",
        ))
    for i, j in np.argwhere(k.a < 0):
        violations.append(KernelViolation(
            constraint="symmetry_nonnegativity", indices=[int(i) + 1, int(j) + 1],
            detail=f"a({i + 1},{j + 1})={k.a[i, j]:.6g} < 0",
        ))
    for i, j in np.argwhere(k.beta < 0):
        violations.append(KernelViolation(
            constraint="symmetry_nonnegativity", indices=[int(i) + 1, int(j) + 1],
            detail=f"beta({i + 1},{j + 1})={k.beta[i, j]:.6g} < 0",
        ))

    if k.B[0] != 0:
        violations.append(KernelViolation(
            constraint="monomer_no_breakup", indices=[1], detail=f"B(1)={k.B[0]:.6g} != 0",
        ))
    for i in np.flatnonzero(k.B < 0):
        violations.append(KernelViolation(
            constraint="monomer_no_breakup", indices=[int(i) + 1],
            detail=f"B({i + 1})={k.B[i]:.6g} < 0",
        ))

    for i in range(2, n + 1):
        daughters = float(np.dot(sizes[: i - 1], k.beta[i - 1, : i - 1]))
        if abs(daughters - i) > DAUGHTER_MASS_RTOL * i:
            violations.append(KernelViolation(
                constraint="daughter_mass", indices=[i],
                detail=f"sum_j j*beta({i},j)={daughters:.15g} != {i}",
            ))

    growth = k.C_growth * (sizes[:, None] + sizes[None, :]) ** (1.0 - k.zeta)
    for i, j in np.argwhere(k.a > growth * (1.0 + BOUND_RTOL)):
        if i <= j:
            violations.append(KernelViolation(
                constraint="growth_bound", indices=[int(i) + 1, int(j) + 1],
                detail=f"a={k.a[i, j]:.6g} > C(i+j)^(1-zeta)={growth[i, j]:.6g}",
            ))
    if not 0 < k.zeta <= 1 or k.C_growth <= 0:
        violations.append(KernelViolation(
            constraint="growth_bound", indices=[],
            detail=f"need zeta in (0,1] and C>0, got zeta={k.zeta}, C={k.C_growth}",
        ))

    for m in np.flatnonzero(~np.isfinite(k.gamma) | (k.gamma <= 0)):
        violations.append(KernelViolation(
            constraint="fragmentation_compatibility", indices=[int(m) + 1],
            detail=f"gamma({m + 1})={k.gamma[m]!r} must be finite and positive",
        ))
    for m in range(1, n):
        j = np.arange(m + 1, n + 1)
        lhs = k.B[j - 1] * k.beta[j - 1, m - 1]
        with np.errstate(invalid="ignore"):
            rhs = k.gamma[m - 1] * k.a[m - 1, j - 1]
        # inf * 0 is nan: breakup into m with no coagulation rate to bound it
        broken = (lhs > rhs * (1.0 + BOUND_RTOL)) | ((lhs > 0) & ~np.isfinite(rhs))
        for jj in j[broken]:
            violations.append(KernelViolation(
                constraint="fragmentation_compatibility", indices=[m, int(jj)],
                detail=f"B({jj})beta({jj},{m}) > gamma({m})a({m},{jj})",
            ))

    bad_d = np.flatnonzero((k.d < k.D0) | (k.d > k.D1) | (k.d <= 0))
    for i in bad_d:
        violations.append(KernelViolation(
            constraint="diffusion_bounds", indices=[int(i) + 1],
            detail=f"d({i + 1})={k.d[i]:.6g} outside [D0={k.D0:.6g}, D1={k.D1:.6g}] or nonpositive",
        ))
    if k.D0 <= 0 or k.D0 > k.D1:
        violations.append(KernelViolation(
            constraint="diffusion_bounds", indices=[],
            detail=f"need 0 < D0 <= D1, got D0={k.D0}, D1={k.D1}",
        ))

    return ValidationReport(violations=violations)


def get_supported_families() -> Dict[str, List[str]]:
    """Return the built-in coagulation, fragmentation and diffusion families."""
    return {
        "coagulation": ["constant", "sum_power"],
        "fragmentation": ["none", "binary_uniform"],
        "diffusion": ["uniform", "list"],
    }


def get_family_info() -> Dict[str, Dict[str, Union[str, List[str]]]]:
    """Return parameters and formulas of the built-in families."""
    return {
        "constant": {
            "kind": "coagulation",
            "formula": "a(i,j) = a0",
            "parameters": ["a0", "zeta"],
        },
        "sum_power": {
            "kind": "coagulation",
            "formula": "a(i,j) = a0 (i+j)^(1-zeta)",
            "parameters": ["a0", "zeta"],
        },
        "none": {
            "kind": "fragmentation",
            "formula": "B = 0 (beta kept mass-conserving, gamma at GAMMA_FLOOR)",
            "parameters": [],
        },
        "binary_uniform": {
            "kind": "fragmentation",
            "formula": "B(i) = b (i-1), beta(i,j) = 2/(i-1) for j < i",
            "parameters": ["b"],
        },
        "uniform": {
            "kind": "diffusion",
            "formula": "d(i) = d0",
            "parameters": ["d0"],
        },
        "list": {
            "kind": "diffusion",
            "formula": "d(i) = d_list[i-1]",
            "parameters": ["d_list"],
        },
    }
