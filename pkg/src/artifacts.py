"""
Data files written by the workbench. Schemas are listed in docs/CSV_SCHEMAS.md.
"""

import json
import logging
from pathlib import Path
from typing import Any, List, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel

from .cellproblem import CellSolution
from .config import settings
from .geometry import PerforatedGrid
from .models import ConvergenceReport
from .solvers.base import Trajectory
from .zerod import ZeroDResult

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _write_frame(frame: pd.DataFrame, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=settings.csv_float_format, lineterminator="\n")
    logger.debug("Wrote %s (%d rows)", path, len(frame))
    return path


def write_json(path: PathLike, payload: Union[BaseModel, Any]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(payload, BaseModel):
        text = payload.model_dump_json(indent=2)
    else:
        text = json.dumps(payload, indent=2, sort_keys=True)
    path.write_text(text + "\n")
    return path


def _coordinate_columns(points: np.ndarray, prefix: str) -> dict:
    return {f"{prefix}{axis}": points[:, axis] for axis in range(points.shape[1])}


def write_mask_csv(path: PathLike, grid: PerforatedGrid) -> Path:
    """One row per voxel of the full lattice: index, center, fluid flag."""
    coords = np.indices(grid.shape).reshape(grid.dim, -1).T
    frame = pd.DataFrame({"index": np.arange(len(coords))})
    for name, column in _coordinate_columns((coords + 0.5) * grid.h, "x").items():
        frame[name] = column
    frame["fluid"] = grid.fluid.ravel().astype(int)
    return _write_frame(frame, path)


def snapshot_frame(traj: Trajectory, index: int) -> pd.DataFrame:
    U = traj.snapshots[index]
    frame = pd.DataFrame({"voxel": np.arange(U.shape[0])})
    for name, column in _coordinate_columns(traj.grid.centers, "x").items():
        frame[name] = column
    for i in range(U.shape[1]):
        frame[f"u{i + 1}"] = U[:, i]
    return frame


def write_snapshots(directory: PathLike, traj: Trajectory) -> List[Path]:
    directory = Path(directory)
    paths = []
    for s, t in enumerate(traj.times):
        frame = snapshot_frame(traj, s)
        frame.insert(0, "t", t)
        paths.append(_write_frame(frame, directory / f"{traj.label}_{s:04d}.csv"))
    return paths


def write_audit_csv(path: PathLike, traj: Trajectory) -> Path:
    frame = pd.DataFrame([row.model_dump() for row in traj.audit])
    return _write_frame(frame[["step", "t", "total_mass", "injected", "lost", "residual"]], path)


def write_corrector_csv(path: PathLike, solution: CellSolution) -> Path:
    frame = pd.DataFrame({"voxel": np.arange(solution.cell.n_fluid)})
    for name, column in _coordinate_columns(solution.cell.centers, "y").items():
        frame[name] = column
    for j in range(solution.cell.dim):
        frame[f"w{j + 1}"] = solution.w[j]
    return _write_frame(frame, path)


def write_zerod_csv(path: PathLike, result: ZeroDResult) -> Path:
    frame = pd.DataFrame({"t": result.times, "N": result.N, "mass": result.mass})
    if result.N_closed_form is not None:
        frame.insert(2, "N_closed_form", result.N_closed_form)
    return _write_frame(frame, path)


def convergence_frame(report: ConvergenceReport) -> pd.DataFrame:
    rows = [
        {
            "epsilon": entry.epsilon,
            "species": i,
            "error": entry.errors[i],
            "duality": entry.duality,
            "mass_residual": entry.mass_residual,
        }
        for entry in report.entries
        for i in report.species
    ]
    return pd.DataFrame(rows, columns=["epsilon", "species", "error", "duality", "mass_residual"])


def write_convergence_csv(path: PathLike, report: ConvergenceReport) -> Path:
    return _write_frame(convergence_frame(report), path)
