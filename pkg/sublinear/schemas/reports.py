from typing import Dict, List, Optional

from pydantic import Field

from .common import BaseSchema, EstimateBranch, LevelClass
from .params import SetCoverParams, SteinerParams


class LedgerSnapshot(BaseSchema):
    membership_queries: int = 0
    distance_queries: int = 0
    phases: Dict[str, Dict[str, int]] = Field(default_factory=dict)


class QueryStatsExport(BaseSchema):
    """Oracle work counters of one RGMM estimate, used by the exponent fits"""
    probes: int = 0
    recursive_calls: List[int] = Field(default_factory=list)
    mean_recursive_calls: float = 0.0
    max_edge_calls: int = 0
    mean_edge_calls: float = 0.0
    neighbor_requests: Dict[int, int] = Field(default_factory=dict)
    depth_histogram: Dict[int, int] = Field(default_factory=dict)


class RgmmEstimate(BaseSchema):
    mu_tilde: float
    samples: int
    matched: int
    vertex_count: int
    epsilon: float
    stats: QueryStatsExport


class EstimateReport(BaseSchema):
    estimate: float = Field(..., description="clamped chi estimate in [0, k]")
    raw_estimate: float
    mu_tilde: float = 0.0
    outside_low: int = Field(0, description="|U \\ U_low|")
    removed_sets: int = Field(0, description="c, sets removed by set sparsification")
    low_size: int = 0
    high_size: int = 0
    k: int
    n: int
    alpha: Optional[float] = None
    beta: Optional[float] = None
    rgmm_samples: int = 0
    branch: EstimateBranch
    variant: str = "thsc"
    ledger: LedgerSnapshot
    params: SetCoverParams
    seed: int
    racing_runs: int = 0


class LevelDiagnostics(BaseSchema):
    level: int
    threshold: float
    tau: float
    classification: Optional[LevelClass] = None
    components: int = 0
    small_components: int = 0
    representatives: int = 0
    u_estimate: Optional[float] = None
    improvement: float = 0.0
    weighted_gain: float = 0.0
    distance_queries: int = 0


class SteinerReport(BaseSchema):
    estimate: float
    mst_weight: float
    total_gain: float
    fired: bool
    branch: EstimateBranch
    dense_reason: Optional[str] = None
    n_points: int
    k: int
    base_scale: float = 0.0
    levels: List[LevelDiagnostics] = Field(default_factory=list)
    ledger: LedgerSnapshot
    params: SteinerParams
    seed: int
