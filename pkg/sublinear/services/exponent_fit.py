"""Log-log exponent fits for query-budget scaling"""
import math
from pathlib import Path
from typing import Union

import numpy as np
import pandas as pd
import structlog
from scipy import stats

from sublinear.core.exceptions import DegenerateDataError
from sublinear.schemas.experiment import ExponentFit
from sublinear.utils.file_utils import FileManager

logger = structlog.get_logger(__name__)

MIN_DISTINCT_X = 4


def fit_exponent(
    data: Union[pd.DataFrame, str, Path],
    x_col: str,
    y_col: str,
    deflate_power: float = 3.0,
) -> ExponentFit:
    """Least-squares slope of log(y / ln(x)^p) against log(x), with a 95% interval"""
    frame = data if isinstance(data, pd.DataFrame) else FileManager.read_csv(data)
    for column in (x_col, y_col):
        if column not in frame.columns:
            raise DegenerateDataError(f"column {column!r} missing; have {list(frame.columns)}")

    subset = frame[[x_col, y_col]].apply(pd.to_numeric, errors="coerce").dropna()
    x = subset[x_col].to_numpy(dtype=np.float64)
    y = subset[y_col].to_numpy(dtype=np.float64)
    if np.any(x <= 0) or np.any(y <= 0):
        raise DegenerateDataError("log-log fit needs positive x and y")
    if deflate_power and np.any(x <= 1):
        raise DegenerateDataError("polylog deflation needs x > 1")

    distinct = int(np.unique(x).size)
    if distinct < MIN_DISTINCT_X:
        raise DegenerateDataError(f"need at least {MIN_DISTINCT_X} distinct x values, got {distinct}")

    deflated = y / np.log(x) ** deflate_power if deflate_power else y
    result = stats.linregress(np.log(x), np.log(deflated))
    dof = x.size - 2
    spread = float(stats.t.ppf(0.975, dof) * result.stderr) if dof > 0 else math.inf

    fit = ExponentFit(
        slope=float(result.slope),
        intercept=float(result.intercept),
        ci_low=float(result.slope - spread),
        ci_high=float(result.slope + spread),
        r_value=float(result.rvalue),
        points=int(x.size),
        distinct_x=distinct,
        x_col=x_col,
        y_col=y_col,
        deflate_power=float(deflate_power),
    )
    logger.info("Exponent fitted", x=x_col, y=y_col, slope=round(fit.slope, 4), points=fit.points)
    return fit
