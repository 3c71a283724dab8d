from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from crossbid.auction.model import STATE_DIM

Variant = Literal["clb_dt", "vanilla_dt"]
HeadStream = Literal["s", "a"]


class ModelConfig(BaseModel):
    """Network shape and regularization settings."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    variant: Variant = "clb_dt"

    d_h: int = Field(default=64, ge=1)
    # None: d_k = d_h, d_ff = 4 d_h
    d_k: Optional[int] = Field(default=None, ge=1)
    d_ff: Optional[int] = Field(default=None, ge=1)
    num_blocks: int = Field(default=3, ge=1)
    window: int = Field(default=20, ge=1)

    state_dim: int = Field(default=STATE_DIM, ge=1)
    horizon: int = Field(default=48, ge=1)

    dropout_rate: float = Field(default=0.1, ge=0, lt=1)
    mask_fill: float = Field(default=-1e4, lt=-1e3)
    layer_norm_eps: float = Field(default=1e-5, gt=0)

    # stream read by the action and RTG heads (CLB-DT only)
    head_stream: HeadStream = "s"
    init_seed: int = Field(default=0, ge=0)

    @property
    def attn_dim(self) -> int:
        return self.d_k or self.d_h

    @property
    def ff_dim(self) -> int:
        return self.d_ff or 4 * self.d_h

    @model_validator(mode="after")
    def _residual_width(self) -> "ModelConfig":
        if self.attn_dim != self.d_h:
            raise ValueError(f"attention width d_k={self.attn_dim} must equal d_h={self.d_h} for the residual sum")
        return self
