from typing import Protocol

import numpy as np

from crossbid.auction._config import LinearPolicySpec
from crossbid.auction.model import EpisodeLog


class BiddingPolicy(Protocol):
    def __call__(self, t: int, state: np.ndarray, history: EpisodeLog) -> float:
        """Returns lambda_t >= 0 for step t given the current state and the steps so far."""
        ...


class ConstantPolicy:
    def __init__(self, lambda_t: float) -> None:
        self.lambda_t = lambda_t

    def __call__(self, t: int, state: np.ndarray, history: EpisodeLog) -> float:
        return self.lambda_t


class LinearPolicy:
    """Noisy linear bid parameter lambda_t = lambda0 + lambda1 * C + noise."""

    def __init__(self, spec: LinearPolicySpec, cpa_threshold: float, seed: int) -> None:
        self.spec = spec
        self.cpa_threshold = cpa_threshold
        self._rng = np.random.default_rng(seed)

    def __call__(self, t: int, state: np.ndarray, history: EpisodeLog) -> float:
        base = self.spec.lambda0 + self.spec.lambda1 * self.cpa_threshold
        noise = self._rng.normal(0.0, self.spec.noise_std) if self.spec.noise_std > 0 else 0.0
        return max(base + noise, 0.0)
