import json
from pathlib import Path
from typing import Any, Literal, Optional

from loguru import logger
from pydantic import Field, ValidationError, field_validator

from crossbid.auction._config import CampaignConfig, LinearPolicySpec, ScoreConfig, default_policy_mixture
from crossbid.base.config import CrossbidBaseSettings
from crossbid.base.errors import ConfigError, CrossbidIOError
from crossbid.loss._config import LossConfig, PenaltyConfig
from crossbid.network._config import ModelConfig

LossKind = Literal["cl", "mse"]

FULL_SCALE = {"max_iterations": 10_000, "learning_rate": 1e-5}


class RunConfig(CrossbidBaseSettings):
    """Everything one run needs; `seed` drives data, initialization, batches and evaluation."""

    campaign: CampaignConfig = Field(default_factory=CampaignConfig)
    network: ModelConfig = Field(default_factory=ModelConfig)
    penalty: PenaltyConfig = Field(default_factory=PenaltyConfig)
    loss: LossConfig = Field(default_factory=LossConfig)
    score: ScoreConfig = Field(default_factory=ScoreConfig)
    policy_mixture: list[LinearPolicySpec] = Field(default_factory=default_policy_mixture, min_length=1)

    # Data
    num_episodes: int = Field(default=100, ge=1)
    validation_fraction: float = Field(default=0.1, ge=0, lt=1)

    # Training (desk scale)
    batch_size: int = Field(default=128, ge=1)
    max_iterations: int = Field(default=2000, ge=1)
    learning_rate: float = Field(default=1e-3, gt=0)
    adam_beta1: float = Field(default=0.9, ge=0, lt=1)
    adam_beta2: float = Field(default=0.999, ge=0, lt=1)
    adam_eps: float = Field(default=1e-8, gt=0)
    weight_decay: float = Field(default=0.01, ge=0)
    loss_kind: LossKind = "cl"
    log_every: int = Field(default=50, ge=1)

    # Evaluation
    budget_ratios: list[float] = Field(default_factory=lambda: [0.5, 0.75, 1.0, 1.25, 1.5], min_length=1)
    num_eval_episodes: int = Field(default=20, ge=1)
    target_rtg_scale: float = Field(default=1.0, ge=0)

    # Matched-vs-shuffled embeddings
    xcorr_samples: int = Field(default=1000, ge=1)
    xcorr_identity: bool = False

    @field_validator("budget_ratios")
    @classmethod
    def _positive_ratios(cls, value: list[float]) -> list[float]:
        if any(r <= 0 for r in value):
            raise ValueError(f"budget ratios must be positive, got {value}")
        return value

    def model_for_run(self) -> ModelConfig:
        """Network config with the horizon and init seed tied to this run."""
        return self.network.model_copy(update={"horizon": self.campaign.horizon, "init_seed": self.seed})

    def full_scale(self) -> "RunConfig":
        logger.info("full-scale training: {}", FULL_SCALE)
        return self.model_copy(update=FULL_SCALE)


def _merge(base: dict[str, Any], overrides: dict[str, Any]) -> dict[str, Any]:
    merged = dict(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_run_config(path: Optional[Path] = None, overrides: Optional[dict[str, Any]] = None) -> RunConfig:
    """
    File values override environment and defaults; `overrides` (CLI flags)
    override the file. Nested overrides are dicts keyed by field name.
    """
    data: dict[str, Any] = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as e:
            raise CrossbidIOError(f"cannot read config {path}: {e}") from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"config {path} is not valid JSON: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"config {path} must hold a JSON object")
    data = _merge(data, overrides or {})
    try:
        return RunConfig(**data)
    except ValidationError as e:
        raise ConfigError(str(e)) from e
