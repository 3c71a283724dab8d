from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

PenaltyMode = Literal["literal", "clamped"]


class PenaltyConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    alpha1: float = Field(default=2.0, gt=1)
    alpha2: float = Field(default=2.0, gt=1)
    # None means theta = C of the trajectory's campaign
    theta: Optional[float] = Field(default=None, gt=0)
    clamp_floor_enabled: bool = False

    @property
    def mode(self) -> PenaltyMode:
        return "clamped" if self.clamp_floor_enabled else "literal"


class LossConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    rtg_weight: float = Field(default=10.0, gt=0)
