"""
Subcommand dispatch: runs the modules for one subcommand and writes its
artifacts into a single run directory.
"""

import asyncio
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from . import artifacts
from .cellproblem import solve_cell_problem
from .config import settings
from .config_loader import write_resolved_config
from .diagnostics import check_linf, linf_bounds
from .geometry import build_reference_cell
from .kernels import build_builtin_kernels, get_family_info, get_supported_families, validate_kernels
from .models import RunConfig
from .solvers import build_homogenized_coefficients, run_macro, run_micro
from .solvers.base import Trajectory
from .source import BoundarySource
from .workflow import ConvergenceWorkflow
from .zerod import run_zerod

logger = logging.getLogger(__name__)

SUBCOMMANDS = ["validate-kernels", "cell", "micro", "macro", "compare", "zerod"]


@dataclass
class OrchestrationResult:
    exit_code: int
    out_dir: Path
    # False when a run finished but its acceptance gates did not hold
    passed: bool = True
    summary: Dict[str, Any] = field(default_factory=dict)
    files: List[Path] = field(default_factory=list)


def default_out_dir(subcommand: str, config: RunConfig) -> Path:
    if config.output_dir:
        return Path(config.output_dir)
    return Path(settings.output_root) / subcommand


def orchestrate(
    subcommand: str,
    config: RunConfig,
    out_dir: Optional[Union[str, Path]] = None,
    threads: Optional[int] = None,
) -> OrchestrationResult:
    """
    Run one subcommand end to end.

    Raises:
        ValueError: If the subcommand is unknown
        WorkbenchError: Any config, geometry, numerical or solver failure
    """
    if subcommand not in SUBCOMMANDS:
        raise ValueError(f"Unsupported subcommand: {subcommand}. Supported: {', '.join(SUBCOMMANDS)}")

    out = Path(out_dir) if out_dir else default_out_dir(subcommand, config)
    threads = threads or config.threads
    result = OrchestrationResult(exit_code=0, out_dir=out)
    result.files.append(write_resolved_config(config, out))
    logger.info("Running %s into %s", subcommand, out)

    if subcommand == "validate-kernels":
        _validate_kernels(config, result)
    elif subcommand == "cell":
        _cell(config, result, threads)
    elif subcommand == "micro":
        _micro(config, result, threads)
    elif subcommand == "macro":
        _macro(config, result, threads)
    elif subcommand == "compare":
        _compare(config, result, threads)
    elif subcommand == "zerod":
        _zerod(config, result)

    return result


def _validate_kernels(config: RunConfig, result: OrchestrationResult) -> None:
    kernels = build_builtin_kernels(config.kernel, config.n_max)
    report = validate_kernels(kernels)
    payload = {
        "ok": report.ok,
        "n_max": kernels.n_max,
        "C_growth": kernels.C_growth,
        "zeta": kernels.zeta,
        "D0": kernels.D0,
        "D1": kernels.D1,
        "gamma": [float(g) for g in kernels.gamma],
        "violations": [v.model_dump() for v in report.violations],
        "families": get_supported_families(),
        "family_info": get_family_info(),
    }
    result.files.append(artifacts.write_json(result.out_dir / "kernel_report.json", payload))
    result.summary = {"ok": report.ok, "violated": report.constraints()}
    if not report.ok:
        result.exit_code = 2


def _cell(config: RunConfig, result: OrchestrationResult, threads: int) -> None:
    cell = build_reference_cell(config.dim, config.radius, config.m_cell)
    solution = solve_cell_problem(cell, config.radius, config.tol, config.max_iter, threads)
    report = solution.to_report()
    result.files.append(artifacts.write_json(result.out_dir / "cell.json", report))
    if config.corrector_csv:
        result.files.append(artifacts.write_corrector_csv(result.out_dir / "corrector.csv", solution))
    result.summary = {"theta": report.theta, "A": report.A}


def _write_trajectory(traj: Trajectory, config: RunConfig, result: OrchestrationResult) -> None:
    stem = traj.label if traj.epsilon is None else f"{traj.label}_eps{traj.epsilon:g}"
    result.files.append(artifacts.write_audit_csv(result.out_dir / f"{stem}_audit.csv", traj))
    if config.write_snapshots:
        result.files.extend(artifacts.write_snapshots(result.out_dir / "snapshots" / stem, traj))


def _micro(config: RunConfig, result: OrchestrationResult, threads: int) -> None:
    kernels = build_builtin_kernels(config.kernel, config.n_max)
    traj = run_micro(config, threads=threads, kernels=kernels)
    _write_trajectory(traj, config, result)
    result.files.append(artifacts.write_mask_csv(result.out_dir / "mask.csv", traj.grid))
    violations = check_linf(traj.maxima, linf_bounds(kernels, config.U1, traj.trace_max), config.linf_headroom)
    result.summary = {
        "epsilon": traj.epsilon,
        "steps": traj.steps,
        "dt_final": traj.dt_final,
        "max_audit_residual": traj.max_audit_residual,
        "linf_violations": violations,
    }
    result.files.append(artifacts.write_json(result.out_dir / "micro_summary.json", result.summary))


def _macro(config: RunConfig, result: OrchestrationResult, threads: int) -> None:
    cell = build_reference_cell(config.dim, config.radius, config.m_cell)
    solution = solve_cell_problem(cell, config.radius, config.tol, config.max_iter, threads)
    coeffs = build_homogenized_coefficients(solution, BoundarySource(config.psi))
    traj = run_macro(config, coeffs, threads=threads)
    _write_trajectory(traj, config, result)
    result.summary = {
        "theta": coeffs.theta,
        "Q_ref": coeffs.Q_ref,
        "steps": traj.steps,
        "dt_final": traj.dt_final,
        "max_audit_residual": traj.max_audit_residual,
    }
    result.files.append(artifacts.write_json(result.out_dir / "macro_summary.json", result.summary))


def _compare(config: RunConfig, result: OrchestrationResult, threads: int) -> None:
    state = asyncio.run(ConvergenceWorkflow(threads=threads).run(config))
    report = state["report"]
    result.files.append(artifacts.write_json(result.out_dir / "cell.json", state["cell"].to_report()))
    result.files.append(artifacts.write_json(result.out_dir / "convergence_report.json", report))
    result.files.append(artifacts.write_convergence_csv(result.out_dir / "convergence.csv", report))
    result.files.append(artifacts.write_audit_csv(result.out_dir / "macro_audit.csv", state["macro"]))
    for micro in state["micro"]:
        result.files.append(
            artifacts.write_audit_csv(result.out_dir / f"micro_eps{micro.epsilon:g}_audit.csv", micro)
        )
    result.passed = report.passed
    if not report.passed:
        logger.warning("Convergence gates failed: %s", "; ".join(report.notes) or "see convergence_report.json")
    result.summary = {
        "passed": report.passed,
        "duality_ratio": report.duality_ratio,
        "errors": {f"{e.epsilon:g}": e.errors for e in report.entries},
    }


def _zerod(config: RunConfig, result: OrchestrationResult) -> None:
    z = config.zerod
    kernels = build_builtin_kernels(config.kernel, z.n_max)
    outcome = run_zerod(kernels, z.N0, z.T, z.dt, z.samples)
    result.files.append(artifacts.write_zerod_csv(result.out_dir / "zerod.csv", outcome))
    result.files.append(artifacts.write_json(result.out_dir / "zerod.json", outcome.report))
    result.summary = outcome.report.model_dump()
