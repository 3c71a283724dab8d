"""Cross Learning Blocks: three parallel streams updated by masked cross-attention."""
from collections.abc import Mapping
from typing import Optional

import torch

from crossbid.base.errors import DimensionError
from crossbid.dataset.batch import SegmentBatch
from crossbid.network._config import ModelConfig
from crossbid.network.attention import attention_mask, masked_cross_attention
from crossbid.network.layers import encode_inputs, feed_forward, heads, norm
from crossbid.network.params import STREAMS, other_streams

Streams = tuple[torch.Tensor, torch.Tensor, torch.Tensor]


def clb_forward(
        streams: Streams,
        params: Mapping[str, torch.Tensor],
        block: int,
        cfg: ModelConfig,
        mask: torch.Tensor,
        training: bool = False,
        generator: Optional[torch.Generator] = None,
) -> Streams:
    """
    One block over (S, A, R). For stream X with others Y, Z:

        X_attn = X + Attn(LN(Y), LN(X), LN(X)) + Attn(LN(Z), LN(X), LN(X))
        X'     = FF(LN'(X_attn))

    Each stream owns its pre-attention LN, which is shared by every path that
    reads it, and one attention path per other stream.
    """
    shape = streams[0].shape
    if any(x.shape != shape for x in streams):
        raise DimensionError(f"stream shapes differ: {[tuple(x.shape) for x in streams]}")

    by_name = dict(zip(STREAMS, streams))
    normed = {name: norm(x, params, f"block{block}.{name}.ln_attn", cfg) for name, x in by_name.items()}

    out = []
    for name in STREAMS:
        prefix = f"block{block}.{name}"
        h = by_name[name]
        for other in other_streams(name):
            h = h + masked_cross_attention(normed[other], normed[name], params, f"{prefix}.from_{other}", mask)
        h = norm(h, params, f"{prefix}.ln_ff", cfg)
        out.append(feed_forward(h, params, prefix, cfg, training, generator))
    return out[0], out[1], out[2]


def clb_stack(
        batch: SegmentBatch,
        params: Mapping[str, torch.Tensor],
        cfg: ModelConfig,
        training: bool = False,
        generator: Optional[torch.Generator] = None,
        num_blocks: Optional[int] = None,
) -> Streams:
    streams = encode_inputs(batch, params, cfg, action_source="prev_actions")
    mask = attention_mask(batch.mask, cfg.mask_fill)
    for b in range(cfg.num_blocks if num_blocks is None else num_blocks):
        streams = clb_forward(streams, params, b, cfg, mask, training, generator)
    return streams


def clb_dt_forward(
        batch: SegmentBatch,
        params: Mapping[str, torch.Tensor],
        cfg: ModelConfig,
        training: bool = False,
        generator: Optional[torch.Generator] = None,
) -> tuple[torch.Tensor, torch.Tensor]:
    s, a, _ = clb_stack(batch, params, cfg, training, generator)
    hidden = s if cfg.head_stream == "s" else a
    return heads(hidden, hidden, params)
