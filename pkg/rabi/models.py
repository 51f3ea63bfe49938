from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, validator

ParamName = Literal["omega", "Omega", "g1", "g2", "chi", "eps"]
Unit = Literal["abs", "gs", "gt", "Omega"]

PARAM_NAMES: Tuple[str, ...] = ("omega", "Omega", "g1", "g2", "chi", "eps")


class ModelParams(BaseModel):
    """The six physical parameters, absolute energy units"""
    omega: float = Field(..., description="Boson frequency")
    Omega: float = Field(1.0, description="Tunneling / level splitting")
    g1: float = Field(0.0, description="Linear coupling")
    g2: float = Field(0.0, description="Nonlinear (two-photon) coupling")
    chi: float = Field(0.0, description="Dimensionless Stark coefficient")
    eps: float = Field(0.0, description="Bias")

    class Config:
        frozen = True

    def replace(self, **changes) -> "ModelParams":
        return self.model_copy(update=changes)


class DerivedScales(BaseModel):
    g_s: float
    g_t: float
    g2_tilde: float
    g1_prime: float
    g2_prime: float
    g2_tilde_prime: float
    x_c: float = Field(..., description="Position scale sqrt(2)*g_s/omega")


class Quantity(BaseModel):
    """A parameter value quoted in a unit that is resolved per parameter point"""
    value: float
    unit: Unit = "abs"

    class Config:
        frozen = True


class ParamSpec(BaseModel):
    """Parameter point in quoted units (g1 in g_s, g2 in g_t, ...)"""
    omega: Quantity
    Omega: Quantity = Quantity(value=1.0)
    g1: Quantity = Quantity(value=0.0)
    g2: Quantity = Quantity(value=0.0)
    chi: Quantity = Quantity(value=0.0)
    eps: Quantity = Quantity(value=0.0)

    class Config:
        frozen = True

    @classmethod
    def from_params(cls, p: ModelParams) -> "ParamSpec":
        return cls(**{name: Quantity(value=getattr(p, name)) for name in PARAM_NAMES})

    def with_value(self, name: str, quantity: Quantity) -> "ParamSpec":
        return self.model_copy(update={name: quantity})


class BandedSymmetricMatrix(BaseModel):
    """Real symmetric banded matrix stored as upper bands {offset: values}"""
    dimension: int
    bands: Dict[int, np.ndarray]

    class Config:
        arbitrary_types_allowed = True


class GroundSolution(BaseModel):
    energy: float
    coeffs: np.ndarray = Field(..., description="c[2n + (0 for spin up, 1 for spin down)]")
    truncation_used: int
    residual_norm: float
    tail_weight: float
    escalations: int = 0
    gap: Optional[float] = Field(None, description="E1 - E0 of the final solve")
    quasi_degenerate: bool = False
    converged: bool = True
    matvecs: int = 0

    class Config:
        arbitrary_types_allowed = True


class ObservableSet(BaseModel):
    sigma_z: float
    sigma_x: float
    x_mean: float
    x_plus: float
    x_minus: float
    rho_plus: float
    rho_minus: float
    x_tilde_plus: float
    x_tilde_minus: float
    parity: float
    depleted: bool = False
    quasi_degenerate: bool = False


class WaveProfile(BaseModel):
    grid: np.ndarray
    psi_plus: np.ndarray
    psi_minus: np.ndarray

    class Config:
        arbitrary_types_allowed = True


class PotentialComponents(BaseModel):
    m_plus: float
    m_minus: float
    varpi_plus: float
    varpi_minus: float
    x0_plus: float
    x0_minus: float
    b_plus: float
    b_minus: float
    b0: float
    e0: float


class StationaryPoint(BaseModel):
    x: float
    energy: float
    kind: Literal["minimum", "saddle", "inflection"]
    curvature: float


class SemiclassicalLandscape(BaseModel):
    x: np.ndarray
    energy: np.ndarray
    stationary_points: List[StationaryPoint] = []
    x_L: Optional[float] = None
    x_S: Optional[float] = None
    x_R: Optional[float] = None

    class Config:
        arbitrary_types_allowed = True

    @property
    def minima(self) -> List[StationaryPoint]:
        return [sp for sp in self.stationary_points if sp.kind == "minimum"]


class FlatteningPoint(BaseModel):
    """End of a first-order arc: x_L, x_S and x_R merge"""
    eps: float
    g1: float
    g2: float
    g2_tilde: float
    x: float


class PolaronParameters(BaseModel):
    zeta: float
    t: float
    alpha: float
    beta: float
    S: float
    delta_c: float
    g1_bar: float
    g2_bar: float
    tunneling: float = Field(..., description="Leading left-right tunneling term -(Omega/2) S")
    overlap: float = Field(..., description="Leading overlap term alpha*beta*[omega + (1-zeta)^2 g1_bar^2 Omega/2] S")


BoundaryKind = Literal[
    "round", "tilted_g1c", "tilted_epsc", "tilted_g2c", "I", "II", "III", "IV",
    "g2E_series", "g2E_exact", "ratio", "g1c_IV",
]


class BoundaryValue(BaseModel):
    kind: BoundaryKind
    value: float
    unit: str = "abs"
    validity: str = ""


class AxisSpec(BaseModel):
    name: ParamName
    start: float
    stop: float
    count: int
    log: bool = False
    unit: Unit = "abs"

    @validator('count')
    def validate_count(cls, v):
        if v < 2:
            raise ValueError("axis needs at least 2 points")
        return v

    @validator('stop')
    def validate_span(cls, v, values):
        if 'start' in values and v == values['start']:
            raise ValueError("axis start and stop coincide")
        return v

    def values(self) -> np.ndarray:
        if self.log:
            return np.geomspace(self.start, self.stop, self.count)
        return np.linspace(self.start, self.stop, self.count)

    @property
    def span(self) -> float:
        return abs(self.stop - self.start)


class ScanResult(BaseModel):
    axis: AxisSpec
    base: ParamSpec
    tol: float
    values: List[float]
    observables: List[Optional[ObservableSet]]
    energies: List[Optional[float]]
    failures: List[Optional[str]]

    @property
    def completion(self) -> float:
        done = sum(1 for o in self.observables if o is not None)
        return done / len(self.values) if self.values else 0.0


class TransitionPoint(BaseModel):
    location: float
    order: Literal["first", "second_like"]
    signal: Literal["sigma_z_jump", "sigma_x_kink", "x_tilde_shift", "susceptibility_peak"]
    delta_sigma_z: float = 0.0
    strength: float = 0.0
    refined: bool = False


class BoundaryCurve(BaseModel):
    fixed: Dict[str, float] = {}
    scan_axis: str
    trace_axis: str
    trace_values: List[float] = []
    points: List[TransitionPoint] = []
    provenance: Literal["detected", "analytic"] = "detected"
    broken: bool = False
    scan_span: float = 0.0
    scan_step: float = 0.0
    scan_log: bool = False
    scan_unit: str = "abs"
    trace_unit: str = "abs"
    base: Optional[ParamSpec] = None

    @validator('points')
    def validate_alignment(cls, v, values):
        if 'trace_values' in values and len(v) != len(values['trace_values']):
            raise ValueError("one transition point per trace value")
        return v


class TricriticalRecord(BaseModel):
    trace_value: float
    location: float
    separation: float
    effective: bool = False


class GridCell(BaseModel):
    index: Tuple[int, ...]
    coords: Tuple[float, ...]
    energy: Optional[float] = None
    observables: Optional[ObservableSet] = None
    truncation: Optional[int] = None
    escalations: Optional[int] = None
    converged: bool = False
    label: Optional[str] = None
    failure: Optional[str] = None


class PhaseDiagramGrid(BaseModel):
    axes: List[AxisSpec]
    cells: List[GridCell]

    @property
    def failed(self) -> int:
        return sum(1 for c in self.cells if c.failure is not None)


TaskKind = Literal["ground", "scan", "diagram", "boundary", "semiclassical", "verify"]


class SweepConfig(BaseModel):
    task: TaskKind = "ground"
    base: ParamSpec
    axes: List[AxisSpec] = []
    tol: float = 1e-10
    jump_threshold: float = 0.1
    peak_factor: float = 5.0
    workers: Optional[int] = None
    out: str = "results"
    bands: Dict[str, float] = {"centered": 0.25, "split": 0.25}
    analytic: bool = False
    suite: Optional[Literal["parity", "stark", "boundaries", "tricritical"]] = None
    points: int = 801

    @validator('tol', 'jump_threshold', 'peak_factor')
    def validate_positive(cls, v):
        if v <= 0:
            raise ValueError("must be positive")
        return v

    @validator('axes')
    def validate_axes(cls, v):
        names = [a.name for a in v]
        if len(set(names)) != len(names):
            raise ValueError("axes must be distinct")
        if len(v) > 2:
            raise ValueError("at most two grid axes")
        return v


class CheckResult(BaseModel):
    name: str
    passed: bool
    detail: str = ""


class SuiteReport(BaseModel):
    suite: str
    checks: List[CheckResult] = []

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)
