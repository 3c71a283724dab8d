from collections.abc import Mapping
from typing import Optional

import torch

from crossbid.base.errors import StepIndexError
from crossbid.dataset.batch import SegmentBatch
from crossbid.kernel.ops import dropout, layer_norm, linear, relu
from crossbid.network._config import ModelConfig


def norm(h: torch.Tensor, params: Mapping[str, torch.Tensor], prefix: str, cfg: ModelConfig) -> torch.Tensor:
    return layer_norm(h, params[f"{prefix}.gamma"], params[f"{prefix}.beta"], cfg.layer_norm_eps)


def feed_forward(
        h: torch.Tensor,
        params: Mapping[str, torch.Tensor],
        prefix: str,
        cfg: ModelConfig,
        training: bool = False,
        generator: Optional[torch.Generator] = None,
) -> torch.Tensor:
    """Linear_2(ReLU(Linear_1(h))) followed by dropout."""
    hidden = relu(linear(h, params[f"{prefix}.ff1.weight"], params[f"{prefix}.ff1.bias"]))
    out = linear(hidden, params[f"{prefix}.ff2.weight"], params[f"{prefix}.ff2.bias"])
    return dropout(out, cfg.dropout_rate, training, generator)


def timestep_encoding(timesteps: torch.Tensor, params: Mapping[str, torch.Tensor], cfg: ModelConfig) -> torch.Tensor:
    """T^0: learned embedding rows for integer steps in [0, horizon)."""
    if bool((timesteps < 0).any()) or bool((timesteps >= cfg.horizon).any()):
        raise StepIndexError(f"timesteps must lie in [0, {cfg.horizon}), got max {int(timesteps.max())}")
    return params["encoder.timestep.weight"][timesteps]


def encode_inputs(
        batch: SegmentBatch,
        params: Mapping[str, torch.Tensor],
        cfg: ModelConfig,
        action_source: str = "prev_actions",
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """
    S^1 = Linear_S(S) + T^0, A^1 = Linear_A(A) + T^0, R^1 = Linear_R(R) + T^0.

    `action_source` picks which action column feeds Linear_A: the CLB-DT
    action stream reads the previous action, vanilla DT the current one.
    """
    t0 = timestep_encoding(batch.timesteps, params, cfg)
    actions = getattr(batch, action_source).unsqueeze(-1)
    s1 = linear(batch.states, params["encoder.state.weight"], params["encoder.state.bias"]) + t0
    a1 = linear(actions, params["encoder.action.weight"], params["encoder.action.bias"]) + t0
    r1 = linear(batch.rtg.unsqueeze(-1), params["encoder.rtg.weight"], params["encoder.rtg.bias"]) + t0
    return s1, a1, r1


def heads(
        action_hidden: torch.Tensor,
        rtg_hidden: torch.Tensor,
        params: Mapping[str, torch.Tensor],
) -> tuple[torch.Tensor, torch.Tensor]:
    a_hat = linear(action_hidden, params["head.action.weight"], params["head.action.bias"]).squeeze(-1)
    r_hat = linear(rtg_hidden, params["head.rtg.weight"], params["head.rtg.bias"]).squeeze(-1)
    return a_hat, r_hat
