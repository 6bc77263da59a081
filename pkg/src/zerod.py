"""
Spatially uniform benchmark: the truncated reaction system without diffusion.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from .errors import NumericalFailure
from .kernels import KernelSet
from .models import ZeroDReport
from .reaction import coagulation_rates, fragmentation_rates
from .solvers.base import MAX_HALVINGS, POSITIVITY_BOUND

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class ZeroDResult:
    report: ZeroDReport
    times: np.ndarray
    N: np.ndarray
    N_closed_form: Optional[np.ndarray]
    mass: np.ndarray


def constant_kernel_number(a0: float, N0: float, t) -> np.ndarray:
    """Total number N0 / (1 + a0 N0 t / 2) for a constant kernel without fragmentation."""
    return N0 / (1.0 + 0.5 * a0 * N0 * np.asarray(t, dtype=float))


def _has_closed_form(k: KernelSet) -> bool:
    return bool(np.all(k.a == k.a[0, 0]) and not k.B.any())


def reaction_rhs(k: KernelSet, u: np.ndarray) -> np.ndarray:
    U = u[None, :]
    Q, _ = coagulation_rates(k, U)
    return (Q + fragmentation_rates(k, U))[0]


def run_zerod(k: KernelSet, N0: float, T: float, dt: float, samples: int = 101) -> ZeroDResult:
    """
    Integrate from monomers u_1 = N0 with the adaptive explicit reaction stepper.

    Raises:
        NumericalFailure: If dt underflows or a concentration turns negative
    """
    n_steps = int(round(T / dt))
    if n_steps < 1:
        raise ValueError(f"T={T} must be at least one step of dt={dt}")
    sample_steps = sorted({int(round(s * n_steps / (samples - 1))) for s in range(samples)})

    u = np.zeros(k.n_max)
    u[0] = N0
    lost = 0.0
    level = 0
    times, numbers, masses = [0.0], [math.fsum(u)], [math.fsum(k.sizes * u)]
    steps = 0

    for base in range(1, n_steps + 1):
        ticks = 0
        while ticks < 2 ** level:
            h = dt / 2 ** level
            while h * float(np.max(k.positivity_rate(u))) > POSITIVITY_BOUND:
                level += 1
                ticks *= 2
                h = dt / 2 ** level
                logger.warning("0-D stepper halving dt to %.3e", h)
                if level > MAX_HALVINGS:
                    raise NumericalFailure("dt underflow in 0-D stepper", step=steps)
            U = u[None, :]
            Q, mass_loss = coagulation_rates(k, U)
            u = (U + h * (Q + fragmentation_rates(k, U)))[0]
            lost += h * float(mass_loss[0])
            steps += 1
            if np.any(u < 0):
                raise NumericalFailure("Negative concentration in 0-D stepper", step=steps)
            ticks += 1

        if base in sample_steps:
            times.append(dt * base)
            numbers.append(math.fsum(u))
            masses.append(math.fsum(k.sizes * u))

    times_arr = np.asarray(times)
    N = np.asarray(numbers)
    closed = constant_kernel_number(k.a[0, 0], N0, times_arr) if _has_closed_form(k) else None
    N_closed_final = float(closed[-1]) if closed is not None else None
    rel = abs(N[-1] - N_closed_final) / N_closed_final if N_closed_final else None

    report = ZeroDReport(
        n_max=k.n_max,
        N0=N0,
        T=T,
        steps=steps,
        dt_final=dt / 2 ** level,
        N_final=float(N[-1]),
        N_closed_form=N_closed_final,
        relative_error=rel,
        mass_final=masses[-1],
        mass_lost=lost,
    )
    logger.info("0-D benchmark: N(T)=%.10f closed form=%s", report.N_final, N_closed_final)
    return ZeroDResult(report=report, times=times_arr, N=N, N_closed_form=closed, mass=np.asarray(masses))


def reference_solution(k: KernelSet, u0: np.ndarray, T: float, t_eval: np.ndarray, rtol: float = 1e-10):
    """High-accuracy implicit integration of the same ODE system."""
    return solve_ivp(
        lambda _t, u: reaction_rhs(k, u),
        (0.0, T),
        np.asarray(u0, dtype=float),
        method="LSODA",
        t_eval=t_eval,
        rtol=rtol,
        atol=1e-14,
    )
