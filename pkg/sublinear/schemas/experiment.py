from enum import Enum
from typing import Any, Dict, List, Optional

from pydantic import Field, validator

from .common import BaseSchema


class TaskKind(str, Enum):
    THSC = "thsc"
    THSC_NO_PAIRS = "thsc_no_pairs"
    RGMM = "rgmm"
    STEINER = "steiner"
    ORACLE_EQUIV = "oracle_equiv"
    SPARSIFY_PROPS = "sparsify_props"


class InstanceSource(BaseSchema):
    """A generator call (``kind`` + ``params``) or an instance file (``path``)"""
    label: Optional[str] = None
    kind: Optional[str] = None
    path: Optional[str] = None
    params: Dict[str, Any] = Field(default_factory=dict)
    count: int = Field(1, ge=1, description="independent instances drawn from this source")
    instance_seed: int = Field(0, ge=0)

    @validator("path", always=True)
    def validate_one_source(cls, v: Optional[str], values: dict) -> Optional[str]:
        if (v is None) == (values.get("kind") is None):
            raise ValueError("give exactly one of kind or path")
        return v

    def name(self, index: int) -> str:
        base = self.label or self.kind or "file"
        return f"{base}-{index}"


class SlopeCheck(BaseSchema):
    """A log-log fit over the aggregate CSV and the bound its slope must meet"""
    x_col: str = "n"
    y_col: str = "queries_membership"
    deflate_power: float = 3.0
    max_slope: Optional[float] = None
    reference_csv: Optional[str] = Field(
        None, description="slope must also stay strictly below the same fit over this CSV"
    )


class AcceptanceSpec(BaseSchema):
    """What `run --assert` checks"""
    min_pass_rate: Optional[float] = Field(0.99, ge=0.0, le=1.0)
    max_errors: int = Field(0, ge=0)
    required_checks: List[str] = Field(
        default_factory=list, description="boolean columns that must hold on every row"
    )
    slopes: List[SlopeCheck] = Field(default_factory=list)


class ExperimentSpec(BaseSchema):
    name: str
    task: TaskKind
    instances: List[InstanceSource] = Field(..., min_length=1)
    seeds: List[int] = Field(..., min_length=1)
    params: Dict[str, Any] = Field(default_factory=dict)
    output: Optional[str] = None
    acceptance: Optional[AcceptanceSpec] = None

    @validator("seeds")
    def validate_seeds(cls, v: List[int]) -> List[int]:
        if any(s < 0 for s in v):
            raise ValueError("seeds must be non-negative")
        return v


class ExponentFit(BaseSchema):
    slope: float
    intercept: float
    ci_low: float
    ci_high: float
    r_value: float
    points: int
    distinct_x: int
    x_col: str
    y_col: str
    deflate_power: float


class ExperimentSummary(BaseSchema):
    name: str
    task: TaskKind
    runs: int
    failures: int
    passed: int
    checked: int
    pass_rate: Optional[float] = None
    csv_path: str
    report_dir: str
    fits: List[ExponentFit] = Field(default_factory=list)
    assertion_passed: Optional[bool] = None
    messages: List[str] = Field(default_factory=list)
