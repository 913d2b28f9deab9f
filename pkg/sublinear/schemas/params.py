import math
from typing import List

from pydantic import Field, validator

from sublinear.core.config import settings
from .common import BaseSchema


class SetCoverParams(BaseSchema):
    epsilon: float = Field(default_factory=lambda: settings.DEFAULT_EPSILON, gt=0.0, lt=1.0)
    x: float = Field(default_factory=lambda: settings.DEFAULT_X, gt=0.0, lt=1.0)
    y: float = Field(default_factory=lambda: settings.DEFAULT_Y, gt=0.0, lt=1.0)
    exclude_size_two: bool = False
    seed: int = Field(default=0, ge=0, lt=2**64)
    racing_runs: int = Field(default_factory=lambda: settings.RACING_RUNS, ge=0)

    def alpha(self, n: int) -> float:
        """alpha = n^x, at least 1"""
        return max(float(n) ** self.x, 1.0)

    def beta(self, n: int, k: int) -> float:
        """beta = 10 * max(k / n^(1-y), 1) * n * ln(n) / k"""
        if k == 0:
            return 1.0
        log_n = math.log(max(n, 2))
        return 10.0 * max(k / float(n) ** (1.0 - self.y), 1.0) * n * log_n / k


class SteinerParams(BaseSchema):
    epsilon: float = Field(default_factory=lambda: settings.DEFAULT_EPSILON, gt=0.0, lt=1.0)
    eta: float = Field(default_factory=lambda: settings.DEFAULT_ETA, gt=0.0, lt=1.0)
    c_kappa: float = Field(default_factory=lambda: settings.STEINER_C_KAPPA, gt=0.0)
    c_m: float = Field(default_factory=lambda: settings.STEINER_C_M, gt=0.0)
    c_r: float = Field(default_factory=lambda: settings.STEINER_C_R, gt=0.0)
    c_p: float = Field(default_factory=lambda: settings.STEINER_C_P, gt=0.0)
    c_l: float = Field(default_factory=lambda: settings.STEINER_C_L, gt=0.0)
    c_eta: float = Field(default_factory=lambda: settings.STEINER_C_ETA, gt=0.0)
    c_eta_prime: float = Field(default_factory=lambda: settings.STEINER_C_ETA_PRIME, gt=0.0)
    net_cap_factor: float = Field(default_factory=lambda: settings.STEINER_NET_CAP_FACTOR, gt=0.0)
    tau_fraction: float = Field(default_factory=lambda: settings.STEINER_TAU_FRACTION, gt=0.0, lt=1.0)
    exclude_size_two: bool = True
    seed: int = Field(default=0, ge=0, lt=2**64)

    @validator("c_eta_prime")
    def validate_shrink_factor(cls, v: float, values: dict) -> float:
        eta = values.get("eta")
        if eta is not None and v * eta >= 1.0:
            raise ValueError("c_eta_prime * eta must stay below 1")
        return v

    def kappa(self, n: int) -> float:
        return self.c_kappa * float(n) ** (2.0 / 3.0)

    def m_threshold(self, n: int) -> float:
        return self.c_m * float(n) ** (2.0 / 3.0)

    def r_threshold(self, n: int) -> float:
        return self.c_r * float(n) ** (1.0 / 3.0) * math.log(max(n, 2)) / self.epsilon

    def p_threshold(self, n: int) -> float:
        return self.c_p * float(n) ** (1.0 / 3.0) * math.log(max(n, 2))

    def level_count(self, k: int) -> int:
        """Levels cover MST weights from eps*w(T*)/(k-1) up to w(T*)"""
        span = math.log(max(k - 1, 1) / self.epsilon) / math.log1p(self.epsilon)
        return max(int(math.ceil(self.c_l * span)) + 1, 1)

    def net_cap(self, levels: int) -> int:
        return max(int(math.ceil(self.net_cap_factor * levels / self.epsilon)), 1)

    def sampling_violations(self, n: int, k: int) -> List[str]:
        """Conditions the Case 2/3 sampling path needs; empty when all hold"""
        violations = []
        m = self.m_threshold(n)
        if not k > m:
            violations.append(f"k={k} must exceed M={m:.2f}")
        p = self.p_threshold(n)
        if not k > p:
            violations.append(f"k={k} must exceed P={p:.2f}")
        n_steiner = n - k
        if not n_steiner / self.r_threshold(n) <= self.epsilon * m:
            violations.append("n/R must stay below eps*M")
        if not k / p <= self.epsilon * m:
            violations.append("k/P must stay below eps*M")
        return violations
