"""
Separable boundary source psi(t, x, y) = g(t) p(x) q(y) on the hole boundaries.
"""

import logging
import math
from typing import List, Tuple

import numpy as np

from .models import ExpressionFactor, PsiConfig

logger = logging.getLogger(__name__)

G_ZERO_TOL = 1e-14
PERIODICITY_TOL = 1e-9
SUP_SAMPLES = 2049


def evaluate_factor(factor: ExpressionFactor, s) -> np.ndarray:
    """Evaluate one factor at scalar or array arguments s."""
    s = np.asarray(s, dtype=float)
    kind = factor.kind

    if kind == "constant":
        value = factor.coefficients[0] if factor.coefficients else 0.0
        return np.full(s.shape, float(value))
    elif kind == "polynomial":
        # numpy.polyval wants the highest power first
        return np.polyval(list(reversed(factor.coefficients)) or [0.0], s)
    elif kind == "sine":
        return factor.amplitude * np.sin(factor.wavenumber * s + factor.phase)
    elif kind == "cosine":
        return factor.amplitude * np.cos(factor.wavenumber * s + factor.phase)
    else:
        raise ValueError(f"Unsupported expression kind: {kind}")


def factor_sup(factor: ExpressionFactor, lower: float, upper: float) -> float:
    """Sampled sup-norm of a factor on [lower, upper]; trig factors use |amplitude|."""
    if factor.kind in ("sine", "cosine"):
        span = abs(factor.wavenumber) * (upper - lower)
        if span >= 2 * math.pi:
            return abs(factor.amplitude)
    samples = np.linspace(lower, upper, SUP_SAMPLES)
    return float(np.max(np.abs(evaluate_factor(factor, samples))))


def is_periodic_on_unit_cell(factor: ExpressionFactor) -> bool:
    """q must be Y-periodic: constant or trig with wavenumber a multiple of 2 pi."""
    if factor.kind == "constant":
        return True
    if factor.kind == "polynomial":
        return all(c == 0 for c in factor.coefficients[1:])
    turns = factor.wavenumber / (2 * math.pi)
    return abs(turns - round(turns)) <= PERIODICITY_TOL or factor.amplitude == 0


def psi_issues(psi: PsiConfig) -> List[Tuple[str, str]]:
    """Invariant violations of a boundary source, as (key, message) pairs."""
    issues = []
    g0 = float(evaluate_factor(psi.g, 0.0))
    if abs(g0) > G_ZERO_TOL:
        issues.append((
            "psi.g",
            f"g(0) = {g0!r} but the boundary source must vanish at t = 0",
        ))
    if not is_periodic_on_unit_cell(psi.q):
        issues.append(("psi.q", "q must be periodic on the unit cell"))
    return issues


class BoundarySource:
    """Evaluates psi and its pieces; immutable once built."""

    def __init__(self, config: PsiConfig):
        self.config = config
        self.g = config.g
        self.p = config.p
        self.q = config.q

    @property
    def is_zero(self) -> bool:
        return any(
            f.kind in ("sine", "cosine") and f.amplitude == 0
            or f.kind in ("constant", "polynomial") and not any(f.coefficients)
            for f in (self.g, self.p, self.q)
        )

    def time_factor(self, t: float) -> float:
        return float(evaluate_factor(self.g, t))

    def space_factor(self, x: np.ndarray) -> np.ndarray:
        """p at points x of shape (n, dim)."""
        x = np.atleast_2d(x)
        return evaluate_factor(self.p, x[:, self.p.axis])

    def cell_factor(self, y: np.ndarray) -> np.ndarray:
        """q at cell coordinates y of shape (n, dim)."""
        y = np.atleast_2d(y)
        return evaluate_factor(self.q, y[:, self.q.axis])

    def on_faces(self, centers: np.ndarray, epsilon: float) -> np.ndarray:
        """p(x_f) q(x_f/eps) at face centers, with y taken modulo the unit cell; g(t) is left out."""
        if len(centers) == 0 or self.is_zero:
            return np.zeros(len(centers))
        y = np.mod(centers / epsilon, 1.0)
        return self.space_factor(centers) * self.cell_factor(y)

    def sup_norm(self, T: float, L: float) -> float:
        """||psi||_inf over [0, T] x [0, L]^dim x Y."""
        return factor_sup(self.g, 0.0, T) * factor_sup(self.p, 0.0, L) * factor_sup(self.q, 0.0, 1.0)

    def check_initial_bound(self, U1: float, T: float, L: float) -> bool:
        """Warn when U1 exceeds ||psi||_inf; the solver runs either way."""
        bound = self.sup_norm(T, L)
        if U1 > bound:
            logger.warning("U1=%.4g exceeds ||psi||_inf=%.4g; continuing", U1, bound)
            return False
        return True
