from .common import BaseSchema, EstimateBranch, LevelClass, parse_schema
from .experiment import (
    AcceptanceSpec,
    ExperimentSpec,
    ExperimentSummary,
    ExponentFit,
    InstanceSource,
    SlopeCheck,
    TaskKind,
)
from .params import SetCoverParams, SteinerParams
from .reports import (
    EstimateReport,
    LedgerSnapshot,
    LevelDiagnostics,
    QueryStatsExport,
    RgmmEstimate,
    SteinerReport,
)

__all__ = [
    "AcceptanceSpec",
    "BaseSchema",
    "EstimateBranch",
    "EstimateReport",
    "ExperimentSpec",
    "ExperimentSummary",
    "ExponentFit",
    "InstanceSource",
    "LedgerSnapshot",
    "LevelClass",
    "LevelDiagnostics",
    "QueryStatsExport",
    "RgmmEstimate",
    "SetCoverParams",
    "SlopeCheck",
    "SteinerParams",
    "SteinerReport",
    "TaskKind",
    "parse_schema",
]
