from datetime import datetime, timezone
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field, root_validator, validator


def utcnow() -> datetime:
    return datetime.now(timezone.utc)


class EventRecord(BaseModel):
    """One journal line: estimator failures, discarded trials, run milestones."""

    kind: str
    timestamp: datetime = Field(default_factory=utcnow)
    code: Optional[str] = None
    payload: Dict[str, Any] = {}


class MismatchReport(BaseModel):
    n_test: int
    set_rate: float
    action_rate: float
    ci90_lower: float
    ci90_upper: float
    seed: int
    set_failures: int = 0
    action_failures: int = 0

    @validator("set_rate", "action_rate", "ci90_lower", "ci90_upper")
    def _unit_interval(cls, v: float) -> float:
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"rate {v} outside [0, 1]")
        return v

    @root_validator(skip_on_failure=True)
    def _ordered(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        if not values["ci90_lower"] <= values["action_rate"] <= values["ci90_upper"]:
            raise ValueError("confidence band must contain the action rate")
        if values["set_failures"] > values["action_failures"]:
            raise ValueError("set-level failures must be a subset of action-level failures")
        return values


class RegretTrace(BaseModel):
    per_round: List[float]
    cumulative: List[float]
    mismatch_flags: List[bool]
    refit_failures: int = 0

    @validator("per_round", each_item=True)
    def _nonnegative(cls, v: float) -> float:
        if v < -1e-9:
            raise ValueError(f"negative regret {v}")
        return v

    @property
    def total(self) -> float:
        return self.cumulative[-1] if self.cumulative else 0.0


class TailRow(BaseModel):
    eps: float
    empirical: float
    theoretical: float
    discarded: int


class TailTable(BaseModel):
    T: int
    d: int
    n_trials: int
    discarded: int
    mean_violation: float
    method: str
    rows: List[TailRow]


class CurvePoint(BaseModel):
    estimator: str
    T: int
    set_rate: Optional[float] = None
    action_rate: Optional[float] = None
    failed: bool = False


class CurveCell(BaseModel):
    """One Monte Carlo run of the nested-T experiment for one dimension."""

    d: int
    run: int
    points: List[CurvePoint]


class RunManifest(BaseModel):
    schema_version: int = 1
    run_id: str
    created_utc: str
    command: List[str]
    parameters: Dict[str, Any]
    seeds: Dict[str, Any] = {}
    version: str
    git: Dict[str, Any] = {}
    environment: Dict[str, Optional[str]] = {}
    wall_clock_seconds: float = 0.0
    files: Dict[str, str] = {}
    decisions: Dict[str, str] = {}
