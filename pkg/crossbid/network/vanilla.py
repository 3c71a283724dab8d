"""Baseline DT: interleaved (r, s, a) tokens through causal self-attention blocks."""
from collections.abc import Mapping
from typing import Optional

import torch

from crossbid.dataset.batch import SegmentBatch
from crossbid.network._config import ModelConfig
from crossbid.network.attention import attend, attention_mask
from crossbid.network.layers import encode_inputs, feed_forward, heads, norm
from crossbid.kernel.ops import linear

TOKENS_PER_STEP = 3


def interleave(r: torch.Tensor, s: torch.Tensor, a: torch.Tensor) -> torch.Tensor:
    """(B, M, d) x3 -> (B, 3M, d) ordered r_0, s_0, a_0, r_1, ..."""
    batch, length, width = s.shape
    return torch.stack([r, s, a], dim=2).reshape(batch, TOKENS_PER_STEP * length, width)


def self_attention_block(
        h: torch.Tensor,
        params: Mapping[str, torch.Tensor],
        block: int,
        cfg: ModelConfig,
        mask: torch.Tensor,
        training: bool = False,
        generator: Optional[torch.Generator] = None,
) -> torch.Tensor:
    """Same primitives as a CLB stream with Q, K and V all read from LN(h)."""
    prefix = f"block{block}"
    x = norm(h, params, f"{prefix}.ln_attn", cfg)
    q = linear(x, params[f"{prefix}.attn.q.weight"], params[f"{prefix}.attn.q.bias"])
    k = linear(x, params[f"{prefix}.attn.k.weight"], params[f"{prefix}.attn.k.bias"])
    v = linear(x, params[f"{prefix}.attn.v.weight"], params[f"{prefix}.attn.v.bias"])
    h = h + attend(q, k, v, mask)
    return feed_forward(norm(h, params, f"{prefix}.ln_ff", cfg), params, prefix, cfg, training, generator)


def token_stack(
        batch: SegmentBatch,
        params: Mapping[str, torch.Tensor],
        cfg: ModelConfig,
        training: bool = False,
        generator: Optional[torch.Generator] = None,
        num_blocks: Optional[int] = None,
) -> torch.Tensor:
    s1, a1, r1 = encode_inputs(batch, params, cfg, action_source="actions")
    h = interleave(r1, s1, a1)
    token_valid = batch.mask.repeat_interleave(TOKENS_PER_STEP, dim=1)
    mask = attention_mask(token_valid, cfg.mask_fill)
    for b in range(cfg.num_blocks if num_blocks is None else num_blocks):
        h = self_attention_block(h, params, b, cfg, mask, training, generator)
    return h


def vanilla_dt_forward(
        batch: SegmentBatch,
        params: Mapping[str, torch.Tensor],
        cfg: ModelConfig,
        training: bool = False,
        generator: Optional[torch.Generator] = None,
) -> tuple[torch.Tensor, torch.Tensor]:
    """
    a_hat[t] is read from the s_t token. r_hat[t] is read from the token just
    before r_t (the a_{t-1} token); where step t-1 is outside the window or
    padding, from r_t itself.
    """
    h = token_stack(batch, params, cfg, training, generator)
    batch_size, tokens, width = h.shape
    per_step = h.reshape(batch_size, tokens // TOKENS_PER_STEP, TOKENS_PER_STEP, width)
    s_tokens = per_step[:, :, 1]
    shifted = torch.cat([per_step[:, :1, 0], per_step[:, :-1, 2]], dim=1)
    prev_valid = torch.cat([torch.zeros_like(batch.mask[:, :1]), batch.mask[:, :-1]], dim=1)
    before_r = torch.where(prev_valid.unsqueeze(-1), shifted, per_step[:, :, 0])
    return heads(s_tokens, before_r, params)
