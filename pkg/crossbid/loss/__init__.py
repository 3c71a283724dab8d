from crossbid.loss._config import LossConfig, PenaltyConfig, PenaltyMode
from crossbid.loss.objective import action_loss, rtg_loss, total_loss
from crossbid.loss.penalty import (
    PenaltyBreakdown,
    budget_consumption,
    compute_cpa,
    penalty_bc,
    penalty_cpa,
    total_penalty,
)

__all__ = [
    "LossConfig",
    "PenaltyBreakdown",
    "PenaltyConfig",
    "PenaltyMode",
    "action_loss",
    "budget_consumption",
    "compute_cpa",
    "penalty_bc",
    "penalty_cpa",
    "rtg_loss",
    "total_loss",
]
