"""
Finite-volume diffusion operators on voxel grids and the CG solver.

Operators act on fields stored over fluid voxels. The discrete Laplacian is
G^T G with G the face gradient over fluid-fluid faces, so faces to solid
voxels and to the outer boundary carry zero flux.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as splinalg

from .errors import SolverConvergenceError
from .geometry import PerforatedGrid

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 20000
ISOTROPY_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class FaceGradient:
    """G maps fluid-voxel fields to face differences (u_upper - u_lower)/h."""

    matrix: sparse.csr_matrix
    axis: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    h: float


@dataclass(frozen=True, eq=False)
class SparseOperator:
    """Symmetric operator over fluid voxels; neumann marks a constant null space."""

    matrix: sparse.csr_matrix
    neumann: bool = True

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ x

    def shifted(self, alpha: float, scale: float) -> "SparseOperator":
        """alpha I + scale * self; SPD for alpha > 0."""
        eye = sparse.identity(self.n, format="csr")
        return SparseOperator(matrix=(alpha * eye + scale * self.matrix).tocsr(), neumann=alpha == 0)


@dataclass
class SolveResult:
    x: np.ndarray
    iterations: int
    residual: float


def assemble_face_gradient(grid: PerforatedGrid) -> FaceGradient:
    """Face gradient over fluid-fluid faces, with wrap-around on periodic grids."""
    index = grid.fluid_index
    lowers, uppers, axes = [], [], []

    for axis in range(grid.dim):
        if grid.periodic:
            upper = np.roll(index, -1, axis=axis)
            lower = index
        else:
            lo = [slice(None)] * grid.dim
            hi = [slice(None)] * grid.dim
            lo[axis], hi[axis] = slice(0, -1), slice(1, None)
            lower, upper = index[tuple(lo)], index[tuple(hi)]
        keep = (lower >= 0) & (upper >= 0) & (lower != upper)
        lowers.append(lower[keep])
        uppers.append(upper[keep])
        axes.append(np.full(int(keep.sum()), axis))

    lower = np.concatenate(lowers).astype(np.int64)
    upper = np.concatenate(uppers).astype(np.int64)
    n_faces = len(lower)
    rows = np.concatenate([np.arange(n_faces), np.arange(n_faces)])
    cols = np.concatenate([upper, lower])
    vals = np.concatenate([np.full(n_faces, 1.0 / grid.h), np.full(n_faces, -1.0 / grid.h)])
    G = sparse.csr_matrix((vals, (rows, cols)), shape=(n_faces, grid.n_fluid))
    return FaceGradient(matrix=G, axis=np.concatenate(axes), lower=lower, upper=upper, h=grid.h)


def assemble_neumann_laplacian(grid: PerforatedGrid) -> SparseOperator:
    """-Delta_h with homogeneous Neumann closure on solid and outer faces."""
    G = assemble_face_gradient(grid).matrix
    return SparseOperator(matrix=(G.T @ G).tocsr(), neumann=True)


def _is_isotropic(A: np.ndarray) -> bool:
    scale = float(np.max(np.abs(np.diag(A))))
    off = A - np.diag(np.diag(A))
    return bool(
        np.all(np.abs(off) <= ISOTROPY_RTOL * scale)
        and np.all(np.abs(np.diag(A) - A[0, 0]) <= ISOTROPY_RTOL * scale)
    )


def _cross_block_stencil(grid: PerforatedGrid, j: int, k: int) -> sparse.csr_matrix:
    """Symmetric 2x2-block discretization of -2 d_j d_k with zero row sums."""
    index = grid.fluid_index
    base = [slice(None)] * grid.dim

    def corner(dj: int, dk: int) -> np.ndarray:
        sl = list(base)
        sl[j] = slice(dj, index.shape[j] - 1 + dj)
        sl[k] = slice(dk, index.shape[k] - 1 + dk)
        return index[tuple(sl)]

    c00, c10, c01, c11 = corner(0, 0), corner(1, 0), corner(0, 1), corner(1, 1)
    keep = (c00 >= 0) & (c10 >= 0) & (c01 >= 0) & (c11 >= 0)
    c00, c10, c01, c11 = c00[keep], c10[keep], c01[keep], c11[keep]

    w = 1.0 / (2.0 * grid.h * grid.h)
    pairs = [
        (c00, c00, w), (c11, c11, w), (c10, c10, -w), (c01, c01, -w),
        (c00, c11, -w), (c11, c00, -w), (c10, c01, w), (c01, c10, w),
    ]
    rows = np.concatenate([p[0] for p in pairs])
    cols = np.concatenate([p[1] for p in pairs])
    vals = np.concatenate([np.full(len(p[0]), p[2]) for p in pairs])
    return sparse.csr_matrix((vals, (rows, cols)), shape=(grid.n_fluid, grid.n_fluid))


def assemble_tensor_laplacian(grid: PerforatedGrid, A: np.ndarray) -> SparseOperator:
    """
    -div(A grad) on an unperforated grid.

    An isotropic A = a I returns exactly a times the Neumann Laplacian.
    Off-diagonal entries add a symmetric block stencil per coordinate plane.
    """
    A = np.asarray(A, dtype=float)
    if A.shape != (grid.dim, grid.dim):
        raise ValueError(f"A must be {grid.dim}x{grid.dim}, got {A.shape}")
    if not np.allclose(A, A.T, rtol=0, atol=1e-10 * np.abs(A).max()):
        raise ValueError("A must be symmetric")

    if _is_isotropic(A):
        lap = assemble_neumann_laplacian(grid)
        return SparseOperator(matrix=(A[0, 0] * lap.matrix).tocsr(), neumann=True)

    grad = assemble_face_gradient(grid)
    weights = np.diag(A)[grad.axis]
    matrix = (grad.matrix.T @ sparse.diags(weights) @ grad.matrix).tocsr()

    scale = float(np.max(np.abs(np.diag(A))))
    for j in range(grid.dim):
        for k in range(j + 1, grid.dim):
            a_jk = 0.5 * (A[j, k] + A[k, j])
            if abs(a_jk) > ISOTROPY_RTOL * scale:
                matrix = matrix + a_jk * _cross_block_stencil(grid, j, k)
    return SparseOperator(matrix=matrix.tocsr(), neumann=True)


def solve_spd(
    op: SparseOperator,
    rhs: np.ndarray,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    x0: Optional[np.ndarray] = None,
) -> SolveResult:
    """
    Jacobi-preconditioned conjugate gradients.

    For a Neumann operator the rhs is projected onto zero mean and the
    solution is returned with zero mean.

    Raises:
        SolverConvergenceError: If the relative residual exceeds tol after max_iter
    """
    b = np.asarray(rhs, dtype=float)
    if op.neumann:
        b = b - b.mean()
    b_norm = float(np.linalg.norm(b))
    if b_norm == 0.0:
        return SolveResult(x=np.zeros_like(b), iterations=0, residual=0.0)

    diag = op.matrix.diagonal()
    inv_diag = np.where(diag > 0, 1.0 / np.where(diag > 0, diag, 1.0), 1.0)
    M = sparse.diags(inv_diag)

    iterations = 0

    def _count(_xk: np.ndarray) -> None:
        nonlocal iterations
        iterations += 1

    x, info = splinalg.cg(
        op.matrix, b, x0=x0, rtol=tol, atol=0.0, maxiter=max_iter, M=M, callback=_count,
    )
    if op.neumann:
        x = x - x.mean()
    residual = float(np.linalg.norm(b - op.matrix @ x)) / b_norm
    if info != 0:
        raise SolverConvergenceError(iterations, residual, tol)

    logger.debug("CG converged in %d iterations, relative residual %.3e", iterations, residual)
    return SolveResult(x=x, iterations=iterations, residual=residual)
