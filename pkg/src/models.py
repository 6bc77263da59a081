import math
from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

from .config import settings


class ExpressionFactor(BaseModel):
    """One factor of the separable boundary source psi = g(t) p(x) q(y)."""
    model_config = ConfigDict(extra="forbid")

    kind: Literal["constant", "polynomial", "sine", "cosine"] = "constant"
    coefficients: List[float] = Field(
        default_factory=lambda: [1.0],
        description="constant: [c]; polynomial: c_k multiplying s**k",
    )
    amplitude: float = 1.0
    wavenumber: float = 1.0
    phase: float = 0.0
    axis: int = Field(default=0, ge=0, le=2, description="Coordinate used by spatial factors")


def _default_g() -> ExpressionFactor:
    return ExpressionFactor(kind="polynomial", coefficients=[0.0, 1.0])


def _default_p() -> ExpressionFactor:
    return ExpressionFactor(kind="sine", wavenumber=math.pi, axis=0)


class PsiConfig(BaseModel):
    """Boundary flux on the hole boundaries, psi(t, x, y) = g(t) p(x) q(y)."""
    model_config = ConfigDict(extra="forbid")

    g: ExpressionFactor = Field(default_factory=_default_g)
    p: ExpressionFactor = Field(default_factory=_default_p)
    q: ExpressionFactor = Field(default_factory=ExpressionFactor)


class KernelConfig(BaseModel):
    """Coagulation, fragmentation and diffusion family selection."""
    model_config = ConfigDict(extra="forbid")

    family: Literal["constant", "sum_power"] = "constant"
    a0: float = Field(default=1.0, gt=0)
    zeta: float = Field(default=1.0, gt=0, le=1)
    fragmentation: Literal["none", "binary_uniform"] = "binary_uniform"
    b: float = Field(default=0.5, gt=0)
    diffusion: Literal["uniform", "list"] = "uniform"
    d0: float = Field(default=1.0, gt=0)
    d_list: Optional[List[float]] = None


class ZeroDConfig(BaseModel):
    """Spatially uniform kernel benchmark."""
    model_config = ConfigDict(extra="forbid")

    n_max: int = Field(default=200, ge=1)
    N0: float = Field(default=1.0, ge=0)
    T: float = Field(default=10.0, gt=0)
    dt: float = Field(default=1e-3, gt=0)
    samples: int = Field(default=101, ge=2, description="Rows written to the N(t) CSV")


class RunConfig(BaseModel):
    """Complete, validated description of one workbench run."""
    model_config = ConfigDict(extra="forbid")

    schema_version: Literal[1]

    # Geometry
    dim: Literal[2, 3] = 2
    L: float = Field(default=1.0, gt=0)
    epsilon: float = Field(default=0.125, gt=0, lt=1)
    epsilons: List[float] = Field(default_factory=lambda: [0.25, 0.125, 0.0625])
    radius: float = Field(default=0.25, ge=0, lt=0.5)
    m_cell: int = Field(default=16, ge=8)
    h_macro: float = Field(default=1.0 / 64.0, gt=0)

    # Physics
    n_max: int = Field(default=32, ge=1)
    kernel: KernelConfig = Field(default_factory=KernelConfig)
    U1: float = Field(default=0.1, ge=0)
    psi: PsiConfig = Field(default_factory=PsiConfig)

    # Time stepping
    T: float = Field(default=0.5, gt=0)
    dt: float = Field(default=5e-3, gt=0)
    snapshot_stride: int = Field(default=10, ge=1)

    # Tolerances
    tol: float = Field(default=1e-10, gt=0)
    max_iter: int = Field(default=20000, ge=1)
    audit_tol: float = Field(default=1e-8, gt=0)
    linf_headroom: float = Field(default=0.1, ge=0)

    # Execution and output
    output_dir: Optional[str] = None
    threads: int = Field(default_factory=lambda: settings.default_threads, ge=1)
    seed: int = 0
    write_snapshots: bool = True
    corrector_csv: bool = False
    corrector_error: bool = Field(default=False, description="Report the corrector-augmented error in compare")

    zerod: ZeroDConfig = Field(default_factory=ZeroDConfig)


class KernelViolation(BaseModel):
    """One violated kernel constraint with the offending size indices (1-based)."""
    constraint: Literal[
        "symmetry_nonnegativity",
        "monomer_no_breakup",
        "daughter_mass",
        "growth_bound",
        "fragmentation_compatibility",
        "diffusion_bounds",
    ]
    indices: List[int]
    detail: str


class ValidationReport(BaseModel):
    violations: List[KernelViolation] = Field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def constraints(self) -> List[str]:
        return sorted({v.constraint for v in self.violations})


class MassAuditRow(BaseModel):
    step: int
    t: float
    total_mass: float
    injected: float
    lost: float
    residual: float


class CellReport(BaseModel):
    dim: int
    r: float
    m_cell: int
    theta: float
    A: List[float] = Field(description="Effective tensor, row-major")
    iterations: List[int]
    residuals: List[float]


class EpsilonEntry(BaseModel):
    epsilon: float
    errors: Dict[int, float]
    duality: float
    weighted_duality: float
    mass_residual: float
    steps: int
    dt_final: float
    n_fluid_voxels: int
    linf_violations: List[int] = Field(default_factory=list)
    corrector_errors: Optional[Dict[int, float]] = Field(
        default=None, description="Fluid-voxel error against u + eps u1; diagnostic only",
    )


class ConvergenceReport(BaseModel):
    dim: int
    radius: float
    m_cell: int
    n_max: int
    T: float
    theta: float
    A: List[float]
    species: List[int]
    entries: List[EpsilonEntry]
    monotone: Dict[int, bool]
    factor_two: Dict[int, bool]
    duality_ratio: float
    passed: bool
    notes: List[str] = Field(default_factory=list)


class ZeroDReport(BaseModel):
    n_max: int
    N0: float
    T: float
    steps: int
    dt_final: float
    N_final: float
    N_closed_form: Optional[float] = None
    relative_error: Optional[float] = None
    mass_final: float = 0.0
    mass_lost: float = 0.0


class ErrorResponse(BaseModel):
    """Machine-readable failure printed by the CLI."""
    status: Literal["error"] = "error"
    reason: str = Field(description="Concise slug in snake_case")
    explanation: str
    exit_code: int
    keys: List[str] = Field(default_factory=list)
