from loguru import logger
from pydantic import BaseModel

from crossbid.auction._config import CampaignConfig
from crossbid.auction.model import EpisodeLog
from crossbid.base.errors import DomainError
from crossbid.loss._config import PenaltyConfig, PenaltyMode


class PenaltyBreakdown(BaseModel):
    cpa_T: float
    bc_T: float
    p_cpa: float
    p_bc: float
    p_total: float
    mode: PenaltyMode = "literal"


def compute_cpa(log: EpisodeLog) -> float:
    """Terminal cost per conversion value; 0 when nothing was won."""
    total_value = log.total_value
    if total_value <= 0:
        return 0.0
    return log.total_cost / total_value


def penalty_cpa(cpa_T: float, cpa_threshold: float, cfg: PenaltyConfig) -> float:
    if cpa_threshold <= 0:
        raise DomainError(f"CPA threshold must be positive, got {cpa_threshold}")
    theta = cfg.theta if cfg.theta is not None else cpa_threshold
    if cpa_T > theta:
        return (cpa_T / cpa_threshold) ** cfg.alpha1
    return 1.0


def budget_consumption(log: EpisodeLog, budget: float) -> float:
    if budget <= 0:
        raise DomainError(f"budget must be positive, got {budget}")
    return log.total_cost / budget


def penalty_bc(log: EpisodeLog, budget: float, alpha2: float) -> float:
    return budget_consumption(log, budget) ** alpha2


def total_penalty(log: EpisodeLog, campaign: CampaignConfig, cfg: PenaltyConfig) -> PenaltyBreakdown:
    cpa_T = compute_cpa(log)
    bc_T = budget_consumption(log, campaign.budget)
    p_cpa = penalty_cpa(cpa_T, campaign.cpa_threshold, cfg)
    p_bc = penalty_bc(log, campaign.budget, cfg.alpha2)
    p_total = p_cpa * p_bc
    if cfg.clamp_floor_enabled:
        p_total = max(p_total, 1.0)
    logger.debug(
        "episode {} penalty ({}): cpa={:.4f} bc={:.4f} P={:.4f}", log.episode_id, cfg.mode, cpa_T, bc_T, p_total
    )
    return PenaltyBreakdown(cpa_T=cpa_T, bc_T=bc_T, p_cpa=p_cpa, p_bc=p_bc, p_total=p_total, mode=cfg.mode)
