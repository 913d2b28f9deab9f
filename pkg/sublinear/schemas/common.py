from enum import Enum
from typing import Any, Dict, Type, TypeVar

from pydantic import BaseModel, ValidationError

from sublinear.core.exceptions import ConfigurationError

# Base schema class
class BaseSchema(BaseModel):
    class Config:
        from_attributes = True
        use_enum_values = True

class EstimateBranch(str, Enum):
    DENSE = "dense"
    SPARSE = "sparse"

class LevelClass(str, Enum):
    CASE1 = "case1"
    LIGHT = "light"
    HEAVY = "heavy"

SchemaT = TypeVar("SchemaT", bound=BaseModel)

def parse_schema(model: Type[SchemaT], data: Dict[str, Any]) -> SchemaT:
    """Validate raw parameters, surfacing pydantic errors as ConfigurationError"""
    try:
        return model(**data)
    except ValidationError as exc:
        raise ConfigurationError(f"invalid {model.__name__}: {exc}") from exc
