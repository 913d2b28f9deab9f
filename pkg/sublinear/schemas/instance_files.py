from typing import Any, Dict, List, Optional

from pydantic import Field, validator

from .common import BaseSchema


class SetSystemFile(BaseSchema):
    """JSON layout {"k": ..., "sets": [[indices], ...]}"""
    k: int = Field(..., ge=0)
    sets: List[List[int]]
    metadata: Dict[str, Any] = Field(default_factory=dict)


class MetricFile(BaseSchema):
    """JSON layout {"n": ..., "coords" | "matrix": ..., "terminals": [...]}"""
    n: int = Field(..., ge=1)
    coords: Optional[List[List[float]]] = None
    matrix: Optional[List[List[float]]] = None
    terminals: List[int]
    metadata: Dict[str, Any] = Field(default_factory=dict)

    @validator("matrix")
    def validate_single_source(cls, v: Optional[List[List[float]]], values: dict) -> Optional[List[List[float]]]:
        if (v is None) == (values.get("coords") is None):
            raise ValueError("exactly one of 'coords' or 'matrix' is required")
        return v
