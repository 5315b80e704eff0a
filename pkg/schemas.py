import enum
import json
import math
from datetime import datetime
from typing import Dict, List, Optional

from pydantic import BaseModel, field_validator, model_validator

DEFAULT_THETA0 = math.pi / 4
QUARTER_PERIOD = math.pi / 2


def _finite(name, v):
    if v is None or not math.isfinite(v):
        raise ValueError(f'{name} must be a finite number')
    return v


class EngineKind(str, enum.Enum):
    zeno = "zeno"
    generator = "generator"
    variational = "variational"


class ScenarioKind(str, enum.Enum):
    triplet = "triplet"
    not_gate = "not-gate"
    fermion_check = "fermion-check"
    polarizer = "polarizer"
    network = "network"


class OutputFormat(str, enum.Enum):
    csv = "csv"
    json = "json"
    xlsx = "xlsx"


class SweepAxis(str, enum.Enum):
    dt = "dt"
    k = "k"
    theta0 = "theta0"


# Drive and penalty schemas
class DriveSpec(BaseModel):
    omega: float
    theta0: float = 0.0
    target: int = 1  # 1-based particle / qubit label

    @field_validator('omega', 'theta0')
    @classmethod
    def validate_finite(cls, v, info):
        return _finite(info.field_name, v)

    @field_validator('target')
    @classmethod
    def validate_target(cls, v):
        if v < 1:
            raise ValueError('target is a 1-based label')
        return v


class PenaltyEnergies(BaseModel):
    e_a: float = 1.0
    e_b: float = 1.0
    e_c: float = 1.0
    e_d: float = 1.0
    floor: Optional[float] = None

    @model_validator(mode='after')
    def validate_floor(self):
        energies = (self.e_a, self.e_b, self.e_c, self.e_d)
        for e in energies:
            _finite('energy', e)
        floor = self.floor if self.floor is not None else min(energies)
        if not floor > 0:
            raise ValueError('penalty floor E must be > 0')
        if min(energies) < floor:
            raise ValueError(f'all penalty energies must be >= floor {floor}')
        return self

    @classmethod
    def uniform(cls, value: float) -> "PenaltyEnergies":
        return cls(e_a=value, e_b=value, e_c=value, e_d=value)

    def as_tuple(self):
        return (self.e_a, self.e_b, self.e_c, self.e_d)


# Engine schemas
class EngineConfig(BaseModel):
    dt: float
    T: float
    engine: EngineKind = EngineKind.generator
    omega: float = 1.0
    enforce_subspace: bool = True
    drive_target: int = 0  # 0-based subsystem index

    @field_validator('dt', 'T', 'omega')
    @classmethod
    def validate_finite(cls, v, info):
        return _finite(info.field_name, v)

    @model_validator(mode='after')
    def validate_grid(self):
        if not 0 < self.dt <= self.T:
            raise ValueError('require 0 < dt <= T')
        return self

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.T / self.dt)))


class ScenarioConfig(BaseModel):
    kind: ScenarioKind
    engine: EngineKind = EngineKind.generator
    dt: float = 1e-2
    T: float = QUARTER_PERIOD
    omega: float = 1.0
    theta0: float = DEFAULT_THETA0
    enforce_subspace: bool = True
    energies: Optional[PenaltyEnergies] = None
    network: Optional[str] = None
    chain_length: Optional[int] = None
    driven_qubit: Optional[int] = None
    target_bit: Optional[int] = None
    steps: int = 1000
    angle: float = QUARTER_PERIOD
    output: Optional[str] = None
    format: OutputFormat = OutputFormat.csv

    @field_validator('dt', 'T', 'omega', 'theta0', 'angle')
    @classmethod
    def validate_finite(cls, v, info):
        return _finite(info.field_name, v)

    @field_validator('steps')
    @classmethod
    def validate_steps(cls, v):
        if v < 1:
            raise ValueError('polarizer needs at least one step')
        return v

    @field_validator('target_bit')
    @classmethod
    def validate_target_bit(cls, v):
        if v is not None and v not in (0, 1):
            raise ValueError('target_bit must be 0 or 1')
        return v

    @field_validator('chain_length')
    @classmethod
    def validate_chain_length(cls, v):
        if v is not None and v < 1:
            raise ValueError('chain_length must be at least 1')
        return v

    @model_validator(mode='after')
    def validate_kind(self):
        if self.kind != ScenarioKind.polarizer and not 0 < self.dt <= self.T:
            raise ValueError('require 0 < dt <= T')
        if self.kind == ScenarioKind.network and self.network is None and self.chain_length is None:
            raise ValueError('network scenarios need a network file or a chain length')
        return self

    def engine_config(self, drive_target: int = 0) -> EngineConfig:
        return EngineConfig(
            dt=self.dt,
            T=self.T,
            engine=self.engine,
            omega=self.omega,
            enforce_subspace=self.enforce_subspace,
            drive_target=drive_target,
        )

    def normalized(self) -> str:
        """Canonical JSON form; parsing it back gives an equal config."""
        return json.dumps(self.model_dump(mode='json'), sort_keys=True, separators=(',', ':'))


class SweepConfig(BaseModel):
    template: ScenarioConfig
    axis: SweepAxis
    values: List[float]

    @field_validator('values')
    @classmethod
    def validate_values(cls, v):
        if not v:
            raise ValueError('sweep needs at least one value')
        for x in v:
            _finite('sweep value', x)
        return v

    @model_validator(mode='after')
    def validate_axis(self):
        if self.axis == SweepAxis.k and self.template.kind != ScenarioKind.network:
            raise ValueError('a k sweep runs network scenarios only')
        return self


# Result schemas
class TrajectoryRow(BaseModel):
    t: float
    re: List[float]
    im: List[float]
    diag: List[List[float]]
    energy: Optional[float] = None
    survival: float
    fidelity: Optional[float] = None


class RunSummary(BaseModel):
    kind: str
    engine: str
    status: str = "ok"
    steps: int = 0
    terminal_fidelity: Optional[float] = None
    fidelity_to_initial: Optional[float] = None
    trajectory_error: Optional[float] = None
    max_energy: Optional[float] = None
    survival: Optional[float] = None
    t_star: Optional[float] = None
    message: str = ""
    extra: Dict[str, float] = {}

    def summary_line(self) -> str:
        parts = [f"{self.kind} [{self.engine}] {self.status}", f"steps={self.steps}"]
        for name in ("terminal_fidelity", "max_energy", "survival", "t_star"):
            value = getattr(self, name)
            if value is not None:
                parts.append(f"{name}={value:.12g}")
        if self.message:
            parts.append(self.message)
        return " ".join(parts)


class VerifyItem(BaseModel):
    name: str
    passed: bool
    residual: Optional[float] = None
    tolerance: Optional[float] = None
    detail: str = ""


class VerifyReport(BaseModel):
    items: List[VerifyItem]

    @property
    def passed(self) -> bool:
        return all(item.passed for item in self.items)

    @property
    def failures(self) -> List[VerifyItem]:
        return [item for item in self.items if not item.passed]


class ExperimentRecord(BaseModel):
    status: str
    driven_qubit: int
    target_bit: int
    engine: str
    theta0: float
    dt: float
    arrival_time: Optional[float] = None
    t_star: Optional[float] = None
    terminal_success: Optional[float] = None
    max_violation: Optional[float] = None
    max_energy: Optional[float] = None
    unmatched: List[str] = []


class ScalingRow(BaseModel):
    k: int
    status: str
    t_star: Optional[float] = None
    terminal_success: Optional[float] = None
    max_energy: Optional[float] = None
    max_violation: Optional[float] = None


class EngineRun(BaseModel):
    engine: str
    fidelity_to_reference: float
    fidelity_to_initial: float
    survival: float


class DivergenceRecord(BaseModel):
    scenario: str
    dt: float
    T: float
    theta0: float
    omega: float
    runs: List[EngineRun]
    local_leakage: Optional[float] = None
    a_freezes: bool
    a_matches_b: bool
    b_c_rotate: bool

    def run(self, engine: str) -> EngineRun:
        for r in self.runs:
            if r.engine == engine:
                return r
        raise KeyError(engine)


class SweepRow(BaseModel):
    axis: str
    value: float
    status: str
    exit_status: int = 0
    terminal_fidelity: Optional[float] = None
    trajectory_error: Optional[float] = None
    t_star: Optional[float] = None
    max_energy: Optional[float] = None
    survival: Optional[float] = None
    output: Optional[str] = None
    message: str = ""


# Ledger schemas
class RunLog(BaseModel):
    id: int
    kind: str
    engine: str
    status: str
    exit_status: int
    config_json: str
    terminal_fidelity: Optional[float] = None
    max_energy: Optional[float] = None
    survival: Optional[float] = None
    message: Optional[str] = None
    created_at: datetime

    class Config:
        from_attributes = True
