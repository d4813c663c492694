"""Model parameters of the bouncing-GBM ask/bid price model."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError


@dataclass(frozen=True)
class ModelParams:
    """The five parameters driving every law in the model.

    ``mu_a``/``mu_b`` are the drifts of the log ask/bid driving motions per
    unit time; the spread is stationary only when ``mu_a < mu_b``.
    ``sigma_a``/``sigma_b`` are the volatilities per square-root time (> 0),
    and ``delta`` is the half tick in log price imposed after each trade (> 0).
    """

    mu_a: float
    mu_b: float
    sigma_a: float
    sigma_b: float
    delta: float

    def __post_init__(self):
        vals = (self.mu_a, self.mu_b, self.sigma_a, self.sigma_b, self.delta)
        if not all(math.isfinite(v) for v in vals):
            raise DomainError("model parameters must be finite")
        if not self.mu_a < self.mu_b:
            raise DomainError(
                f"mu_a < mu_b required, got mu_a={self.mu_a}, mu_b={self.mu_b}"
            )
        if self.sigma_a <= 0.0 or self.sigma_b <= 0.0:
            raise DomainError("sigma_a and sigma_b must be positive")
        if self.delta <= 0.0:
            raise DomainError("delta must be positive")

    @property
    def sigma2_sum(self) -> float:
        """Variance rate of the ask/bid log difference."""
        return self.sigma_a**2 + self.sigma_b**2

    @property
    def drift_gap(self) -> float:
        """Approach rate ``mu_b - mu_a`` of the log difference (> 0)."""
        return self.mu_b - self.mu_a

    @property
    def tail_index(self) -> float:
        """Exponent of the stationary power law of the ask/bid ratio."""
        return 2.0 * self.drift_gap / self.sigma2_sum

    @property
    def mean_intertrade(self) -> float:
        """Expected time between consecutive trades, ``2*delta/(mu_b-mu_a)``."""
        return 2.0 * self.delta / self.drift_gap

    def astuple(self) -> tuple[float, float, float, float, float]:
        return (self.mu_a, self.mu_b, self.sigma_a, self.sigma_b, self.delta)
