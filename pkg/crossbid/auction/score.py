from pydantic import BaseModel

from crossbid.auction._config import ScoreConfig
from crossbid.auction.model import EpisodeLog


class ScoreReport(BaseModel):
    score: float
    total_value: float
    total_cost: float
    cost_rate: float
    penalties: dict[str, float]

    @property
    def penalty(self) -> float:
        return min(self.penalties.values())


def kpi_penalty(threshold: float, cost_rate: float, beta: float) -> float:
    """min((C / cost_rate)^beta, 1); a zero cost-rate never violates."""
    if cost_rate <= 0:
        return 1.0
    return min((threshold / cost_rate) ** beta, 1.0)


def compute_score(log: EpisodeLog, sc: ScoreConfig) -> ScoreReport:
    total_value = log.total_value
    total_cost = log.total_cost
    if total_value <= 0:
        penalties = {f"{k.name}_{i}": 1.0 for i, k in enumerate(sc.kpi_constraints)}
        return ScoreReport(score=0.0, total_value=0.0, total_cost=total_cost, cost_rate=0.0, penalties=penalties)

    cost_rate = total_cost / total_value
    penalties = {}
    for i, kpi in enumerate(sc.kpi_constraints):
        threshold = kpi.threshold if kpi.threshold is not None else log.campaign.cpa_threshold
        penalties[f"{kpi.name}_{i}"] = kpi_penalty(threshold, cost_rate, sc.beta_exponent)
    return ScoreReport(
        score=total_value * min(penalties.values()),
        total_value=total_value,
        total_cost=total_cost,
        cost_rate=cost_rate,
        penalties=penalties,
    )
