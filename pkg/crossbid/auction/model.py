import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from crossbid.auction._config import CampaignConfig
from crossbid.base.errors import DomainError

STATE_FEATURES = (
    "remaining_budget",
    "remaining_steps",
    "last_win_rate",
    "last_avg_cost",
    "cost_rate",
    "budget_consumed",
    "last_action",
)
STATE_DIM = len(STATE_FEATURES)


@dataclass(frozen=True, slots=True)
class ImpressionOpportunity:
    value: float
    competing_bid: float

    def __post_init__(self) -> None:
        for name in ("value", "competing_bid"):
            x = getattr(self, name)
            if not math.isfinite(x) or x < 0:
                raise DomainError(f"impression {name} must be finite and nonnegative, got {x}")


@dataclass(frozen=True, slots=True)
class AuctionOutcome:
    won: int
    cost: float
    realized_value: float


@dataclass
class StepRecord:
    """Aggregates for one decision step; per-impression arrays are optional."""

    t: int
    action: float
    state: np.ndarray
    reward: float
    cost: float
    wins: int
    impressions: int
    cumulative_cost: float
    cumulative_value: float
    values: Optional[np.ndarray] = None
    competing_bids: Optional[np.ndarray] = None
    won: Optional[np.ndarray] = None


@dataclass
class EpisodeLog:
    campaign: CampaignConfig
    episode_id: int = 0
    seed: int = 0
    steps: list[StepRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def complete(self) -> bool:
        return len(self.steps) == self.campaign.horizon

    @property
    def actions(self) -> np.ndarray:
        return np.array([s.action for s in self.steps], dtype=np.float64)

    @property
    def rewards(self) -> np.ndarray:
        return np.array([s.reward for s in self.steps], dtype=np.float64)

    @property
    def states(self) -> np.ndarray:
        if not self.steps:
            return np.zeros((0, STATE_DIM))
        return np.stack([s.state for s in self.steps])

    @property
    def total_cost(self) -> float:
        return self.steps[-1].cumulative_cost if self.steps else 0.0

    @property
    def total_value(self) -> float:
        return self.steps[-1].cumulative_value if self.steps else 0.0

    @property
    def total_wins(self) -> int:
        return sum(s.wins for s in self.steps)
