from collections.abc import Mapping
from typing import Optional

import torch

from crossbid.dataset.batch import SegmentBatch
from crossbid.network._config import ModelConfig
from crossbid.network.clb import clb_dt_forward, clb_stack
from crossbid.network.vanilla import token_stack, vanilla_dt_forward


def model_forward(
        batch: SegmentBatch,
        params: Mapping[str, torch.Tensor],
        cfg: ModelConfig,
        training: bool = False,
        generator: Optional[torch.Generator] = None,
) -> tuple[torch.Tensor, torch.Tensor]:
    """(a_hat, r_hat), each (B, M), for whichever variant `cfg` selects."""
    if cfg.variant == "vanilla_dt":
        return vanilla_dt_forward(batch, params, cfg, training, generator)
    return clb_dt_forward(batch, params, cfg, training, generator)


def extract_block1_embedding(
        batch: SegmentBatch,
        params: Mapping[str, torch.Tensor],
        cfg: ModelConfig,
) -> torch.Tensor:
    """
    Final-position hidden state after the first block, in eval mode.

    CLB-DT: the S, A and R rows concatenated, (B, 3 d_h).
    Vanilla DT: the last token row, (B, d_h).
    Segments are left-padded, so the final position is always a valid one.
    """
    with torch.no_grad():
        if cfg.variant == "vanilla_dt":
            h = token_stack(batch, params, cfg, num_blocks=1)
            return h[:, -1]
        s, a, r = clb_stack(batch, params, cfg, num_blocks=1)
        return torch.cat([s[:, -1], a[:, -1], r[:, -1]], dim=-1)
