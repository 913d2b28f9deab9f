from typing import Optional
from pydantic_settings import BaseSettings
from pydantic import validator
from functools import lru_cache

class Settings(BaseSettings):
    # App settings
    APP_NAME: str = "Sublinear Estimators Bench"
    DEBUG: bool = False
    ENVIRONMENT: str = "development"

    # Set cover estimator defaults
    DEFAULT_EPSILON: float = 0.1
    DEFAULT_X: float = 1.0 / 3.0
    DEFAULT_Y: float = 1.0 / 3.0
    SET_SPARSIFY_STOP_FACTOR: float = 10.0    # break when |U^| < 10 * alpha * ln n
    SET_SPARSIFY_HIT_FACTOR: float = 10.0     # remove S when sampled hits >= 10 * ln n
    ELEMENT_SPARSIFY_FACTOR: float = 20.0     # low iff hits <= 20 * ln n / eps
    RGMM_SAMPLE_CONSTANT: float = 48.0        # s = ceil(48 * ln k / eps^2)

    # Exact baselines
    EXACT_SET_COVER_MAX_K: int = 22
    EXACT_STEINER_MAX_POINTS: int = 16
    DREYFUS_WAGNER_MAX_POINTS: int = 12

    # Instances
    DISTANCE_DECIMALS: int = 6
    TRIANGLE_CHECK_MAX_POINTS: int = 400
    TRIANGLE_TOLERANCE: float = 1e-9

    # Steiner estimator defaults
    DEFAULT_ETA: float = 0.05
    STEINER_C_KAPPA: float = 1.0
    STEINER_C_M: float = 1.0
    STEINER_C_R: float = 1.0
    STEINER_C_P: float = 1.0
    STEINER_C_L: float = 1.0
    STEINER_C_ETA: float = 1.0
    STEINER_C_ETA_PRIME: float = 1.0
    STEINER_NET_CAP_FACTOR: float = 1.0
    STEINER_TAU_FRACTION: float = 0.6         # tau_i = (3/5) * (1 + eps)^i

    # Racing mode (high-probability amplification); 0 disables it
    RACING_RUNS: int = 0

    # Bench runner
    DEFAULT_JOBS: int = 1
    OUTPUT_DIR: str = "results"

    # Monitoring and logging
    LOG_LEVEL: str = "INFO"
    LOG_FILE: Optional[str] = None

    @validator("DEFAULT_EPSILON", "DEFAULT_X", "DEFAULT_Y", "DEFAULT_ETA")
    def validate_open_unit_interval(cls, v: float) -> float:
        if not 0.0 < v < 1.0:
            raise ValueError("must lie strictly between 0 and 1")
        return v

    @validator("EXACT_SET_COVER_MAX_K")
    def validate_exact_cover_limit(cls, v: int) -> int:
        # 2^k one-byte masks
        if not 1 <= v <= 26:
            raise ValueError("EXACT_SET_COVER_MAX_K must be in [1, 26]")
        return v

    @validator("DEFAULT_JOBS", "RACING_RUNS")
    def validate_non_negative(cls, v: int) -> int:
        if v < 0:
            raise ValueError("must be non-negative")
        return v

    class Config:
        env_file = ".env"
        case_sensitive = True

@lru_cache()
def get_settings() -> Settings:
    return Settings()

settings = get_settings()
