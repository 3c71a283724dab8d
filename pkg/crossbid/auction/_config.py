from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator


class CampaignConfig(BaseModel):
    """Settings for one advertiser campaign and its synthetic market."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    # Constraint constants
    budget: float = Field(default=3000.0, gt=0)
    cpa_threshold: float = Field(default=1.0, gt=0)

    # Episode shape
    horizon: int = Field(default=48, ge=1)
    impressions_per_step: int = Field(default=200, ge=1)

    # Log-normal value distribution (v_i)
    value_mean: float = 0.0
    value_sigma: float = Field(default=0.6, ge=0)

    # Log-normal highest competing bid (b_i^-)
    competition_mean: float = 0.2
    competition_sigma: float = Field(default=0.6, ge=0)
    competition_daily_amplitude: float = Field(default=0.25, ge=0)

    seed: int = Field(default=0, ge=0)

    def with_budget_ratio(self, ratio: float) -> "CampaignConfig":
        return self.model_copy(update={"budget": self.budget * ratio})


class KpiConstraint(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    name: Literal["cpa"] = "cpa"
    # None means the campaign's own CPA threshold
    threshold: Optional[float] = Field(default=None, gt=0)


class ScoreConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    beta_exponent: float = Field(default=2.0, gt=0)
    kpi_constraints: list[KpiConstraint] = Field(default_factory=lambda: [KpiConstraint()], min_length=1)

    @field_validator("kpi_constraints")
    @classmethod
    def _requires_cpa(cls, value: list[KpiConstraint]) -> list[KpiConstraint]:
        if not any(k.name == "cpa" for k in value):
            raise ValueError("at least one CPA constraint is required")
        return value


class LinearPolicySpec(BaseModel):
    """lambda_t = lambda0 + lambda1 * C + N(0, noise_std^2), floored at 0."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    lambda0: float = 1.0
    lambda1: float = 0.0
    noise_std: float = Field(default=0.0, ge=0)


def default_policy_mixture() -> list[LinearPolicySpec]:
    return [
        LinearPolicySpec(lambda0=0.1, lambda1=0.0, noise_std=0.02),
        LinearPolicySpec(lambda0=0.3, lambda1=0.2, noise_std=0.05),
        LinearPolicySpec(lambda0=0.6, lambda1=0.2, noise_std=0.1),
        LinearPolicySpec(lambda0=0.8, lambda1=0.4, noise_std=0.1),
        LinearPolicySpec(lambda0=1.2, lambda1=0.3, noise_std=0.2),
        LinearPolicySpec(lambda0=2.0, lambda1=0.5, noise_std=0.3),
        LinearPolicySpec(lambda0=3.0, lambda1=0.5, noise_std=0.4),
        LinearPolicySpec(lambda0=4.5, lambda1=0.5, noise_std=0.3),
    ]
