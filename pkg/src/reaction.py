"""
Truncated coagulation and fragmentation operators.

The batch functions act on arrays of shape (cells, n_max) and are what the
solvers call; the single-point functions validate input, use compensated
summation for the mass terms and are the reference for audits and tests.
"""

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import NumericalFailure
from .kernels import KernelSet

# Upper bound on cells * n_max**2 pair products held in memory at once
CHUNK_ELEMENTS = 1 << 22
CROSS_CHECK_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class ReactionRates:
    """Q, F and the coagulation mass escaping past n_max at one point."""

    Q: np.ndarray
    F: np.ndarray
    mass_loss: float


@dataclass(frozen=True)
class WeakFormCheck:
    """Both sides of the coagulation and fragmentation weak-form identities."""

    coagulation: Tuple[float, float]
    fragmentation: Tuple[float, float]


def _as_checked_vector(k: KernelSet, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape != (k.n_max,):
        raise ValueError(f"Concentration vector must have length {k.n_max}, got shape {u.shape}")
    if np.any(u < 0):
        raise ValueError(f"Negative concentration at sizes {np.flatnonzero(u < 0) + 1}")
    return u


def coagulation_rates(k: KernelSet, U: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Batched truncated coagulation operator.

    Args:
        k: kernel tables
        U: concentrations, shape (cells, n_max)

    Returns:
        (Q, mass_loss): Q of shape (cells, n_max), mass_loss of shape (cells,)
    """
    n = k.n_max
    cells = U.shape[0]
    Q = np.empty_like(U)
    mass_loss = np.empty(cells)
    loss_rate = U @ k.a
    W = k.truncation_weights.ravel()
    rows = max(1, CHUNK_ELEMENTS // (n * n))

    for start in range(0, cells, rows):
        block = U[start:start + rows]
        pairs = (block[:, :, None] * block[:, None, :]).reshape(block.shape[0], n * n)
        gain = np.asarray((k.pair_gain.T @ pairs.T).T)
        Q[start:start + rows] = gain - block * loss_rate[start:start + rows]
        mass_loss[start:start + rows] = pairs @ W

    return Q, mass_loss


def fragmentation_rates(k: KernelSet, U: np.ndarray) -> np.ndarray:
    """Batched truncated fragmentation operator, shape (cells, n_max)."""
    return U @ k.fragmentation_gain - U * k.B


def eval_coagulation(k: KernelSet, u) -> Tuple[np.ndarray, float]:
    """
    Truncated coagulation rates at one point.

    Returns:
        (Q, mass_loss) with mass_loss >= 0 the mass carried past n_max

    Raises:
        ValueError: If u has the wrong length or a negative entry
        NumericalFailure: If -sum i Q_i and the pairwise mass loss disagree
    """
    u = _as_checked_vector(k, u)
    Q, _ = coagulation_rates(k, u[None, :])
    Q = Q[0]

    n = k.n_max
    pair_terms = []
    for i in range(1, n + 1):
        for j in range(max(1, n + 1 - i), n + 1):
            pair_terms.append(0.5 * (i + j) * k.a[i - 1, j - 1] * u[i - 1] * u[j - 1])
    mass_loss = math.fsum(pair_terms)

    weighted = k.sizes * Q
    from_rates = -math.fsum(weighted)
    scale = math.fsum(np.abs(weighted)) + mass_loss
    if abs(from_rates - mass_loss) > CROSS_CHECK_RTOL * max(scale, np.finfo(float).tiny):
        raise NumericalFailure(
            f"Coagulation mass loss mismatch: pairwise {mass_loss:.16e} vs rates {from_rates:.16e}"
        )
    return Q, mass_loss


def eval_fragmentation(k: KernelSet, u) -> np.ndarray:
    """Truncated fragmentation rates at one point."""
    u = _as_checked_vector(k, u)
    return fragmentation_rates(k, u[None, :])[0]


def reaction_rates(k: KernelSet, u) -> ReactionRates:
    Q, mass_loss = eval_coagulation(k, u)
    return ReactionRates(Q=Q, F=eval_fragmentation(k, u), mass_loss=mass_loss)


def weak_form_check(k: KernelSet, u, phi) -> WeakFormCheck:
    """
    Evaluate both sides of the weak-form identities for the truncated operators.

    The coagulation right-hand side is the pair sum over i + j <= n_max plus
    the truncation remainder -1/2 sum_{i+j>n} a u_i u_j (phi_i + phi_j).
    """
    u = _as_checked_vector(k, u)
    phi = np.asarray(phi, dtype=float)
    if phi.shape != u.shape:
        raise ValueError(f"phi must have length {k.n_max}, got shape {phi.shape}")

    Q, _ = eval_coagulation(k, u)
    F = eval_fragmentation(k, u)
    n = k.n_max

    coag_terms = []
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            w = 0.5 * k.a[i - 1, j - 1] * u[i - 1] * u[j - 1]
            if i + j <= n:
                coag_terms.append(w * (phi[i + j - 1] - phi[i - 1] - phi[j - 1]))
            else:
                coag_terms.append(-w * (phi[i - 1] + phi[j - 1]))

    frag_terms = []
    for i in range(2, n + 1):
        daughters = math.fsum(k.beta[i - 1, j - 1] * phi[j - 1] for j in range(1, i))
        frag_terms.append(-k.B[i - 1] * u[i - 1] * (phi[i - 1] - daughters))

    return WeakFormCheck(
        coagulation=(math.fsum(phi * Q), math.fsum(coag_terms)),
        fragmentation=(math.fsum(phi * F), math.fsum(frag_terms)),
    )
