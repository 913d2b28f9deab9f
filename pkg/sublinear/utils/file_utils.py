import json
import os
from pathlib import Path
from typing import Any, Dict, List, Sequence, Union
import logging

import numpy as np
import pandas as pd
from pydantic import BaseModel, ValidationError

from sublinear.core.exceptions import InstanceValidationError
from sublinear.models.instances import MetricInstance, SetSystem
from sublinear.schemas.instance_files import MetricFile, SetSystemFile

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

class FileManager:
    """Instance and report file I/O"""

    @staticmethod
    def ensure_directory(directory: PathLike) -> Path:
        path = Path(directory)
        path.mkdir(parents=True, exist_ok=True)
        return path

    @staticmethod
    def read_json(path: PathLike) -> Dict[str, Any]:
        try:
            with open(path, "r", encoding="utf-8") as handle:
                return json.load(handle)
        except (OSError, json.JSONDecodeError) as e:
            raise InstanceValidationError(f"cannot read {path}: {e}") from e

    @staticmethod
    def write_json(payload: Union[BaseModel, Dict[str, Any]], path: PathLike) -> Path:
        target = Path(path)
        FileManager.ensure_directory(target.parent)
        if isinstance(payload, BaseModel):
            text = payload.model_dump_json(indent=2)
        else:
            text = json.dumps(payload, indent=2, sort_keys=True, default=_json_default)
        target.write_text(text + "\n", encoding="utf-8")
        return target

    @staticmethod
    def load_set_system(path: PathLike) -> SetSystem:
        """Load {"k", "sets"} and validate every invariant on read"""
        raw = FileManager.read_json(path)
        try:
            parsed = SetSystemFile(**raw)
        except ValidationError as e:
            raise InstanceValidationError(f"{path}: {e}") from e
        metadata = dict(parsed.metadata, source=str(path))
        return SetSystem.from_sets(parsed.k, parsed.sets, metadata)

    @staticmethod
    def save_set_system(system: SetSystem, path: PathLike) -> Path:
        payload = SetSystemFile(
            k=system.universe_size,
            sets=[list(s) for s in system.family],
            metadata=_plain(system.metadata),
        )
        return FileManager.write_json(payload, path)

    @staticmethod
    def load_metric(path: PathLike) -> MetricInstance:
        """Load {"n", "coords" | "matrix", "terminals"} and validate every invariant on read"""
        raw = FileManager.read_json(path)
        try:
            parsed = MetricFile(**raw)
        except ValidationError as e:
            raise InstanceValidationError(f"{path}: {e}") from e
        metadata = dict(parsed.metadata, source=str(path))
        if parsed.matrix is not None:
            metric = MetricInstance.from_matrix(parsed.matrix, parsed.terminals, metadata)
        else:
            metric = MetricInstance.from_coords(parsed.coords, parsed.terminals, metadata=metadata)
        if metric.n_points != parsed.n:
            raise InstanceValidationError(f"{path}: declared n={parsed.n}, found {metric.n_points} points")
        return metric

    @staticmethod
    def save_metric(metric: MetricInstance, path: PathLike) -> Path:
        payload = MetricFile(
            n=metric.n_points,
            coords=metric.coords.tolist() if metric.coords is not None else None,
            matrix=metric.matrix.tolist() if metric.matrix is not None else None,
            terminals=list(metric.terminals),
            metadata=_plain(metric.metadata),
        )
        return FileManager.write_json(payload, path)

    @staticmethod
    def write_csv(rows: Sequence[Dict[str, Any]], path: PathLike, columns: List[str]) -> Path:
        target = Path(path)
        FileManager.ensure_directory(target.parent)
        frame = pd.DataFrame(list(rows), columns=columns)
        frame.to_csv(target, index=False)
        logger.info(f"Wrote {len(frame)} rows to {target}")
        return target

    @staticmethod
    def read_csv(path: PathLike) -> pd.DataFrame:
        if not os.path.exists(path):
            raise InstanceValidationError(f"no such CSV file: {path}")
        return pd.read_csv(path)


def _json_default(value: Any) -> Any:
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, BaseModel):
        return value.model_dump()
    raise TypeError(f"not JSON serializable: {type(value).__name__}")


def _plain(metadata: Dict[str, Any]) -> Dict[str, Any]:
    return json.loads(json.dumps(metadata, default=_json_default))
