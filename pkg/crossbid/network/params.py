import math

import torch
from loguru import logger

from crossbid.kernel.ops import DTYPE
from crossbid.kernel.params import ParamStore
from crossbid.network._config import ModelConfig

STREAMS = ("s", "a", "r")
HEAD_SCALE = 0.1


def other_streams(stream: str) -> tuple[str, str]:
    return tuple(o for o in STREAMS if o != stream)


class _Initializer:
    def __init__(self, params: ParamStore, seed: int) -> None:
        self.params = params
        self.generator = torch.Generator().manual_seed(seed)

    def linear(self, prefix: str, fan_in: int, fan_out: int, scale: float = 1.0, bias: bool = True) -> None:
        weight = torch.randn(fan_in, fan_out, generator=self.generator, dtype=DTYPE) / math.sqrt(fan_in)
        self.params.register(f"{prefix}.weight", weight * scale)
        if bias:
            self.params.register(f"{prefix}.bias", torch.zeros(fan_out, dtype=DTYPE))

    def embedding(self, prefix: str, rows: int, width: int) -> None:
        # a lookup is a linear map of a one-hot input, fan_in = 1
        self.params.register(f"{prefix}.weight", torch.randn(rows, width, generator=self.generator, dtype=DTYPE))

    def layer_norm(self, prefix: str, width: int) -> None:
        self.params.register(f"{prefix}.gamma", torch.ones(width, dtype=DTYPE))
        self.params.register(f"{prefix}.beta", torch.zeros(width, dtype=DTYPE))

    def feed_forward(self, prefix: str, cfg: ModelConfig) -> None:
        self.layer_norm(f"{prefix}.ln_ff", cfg.d_h)
        self.linear(f"{prefix}.ff1", cfg.d_h, cfg.ff_dim)
        self.linear(f"{prefix}.ff2", cfg.ff_dim, cfg.d_h)

    def attention(self, prefix: str, cfg: ModelConfig) -> None:
        for proj in ("q", "k", "v"):
            self.linear(f"{prefix}.{proj}", cfg.d_h, cfg.attn_dim)


def init_params(cfg: ModelConfig) -> ParamStore:
    """
    Registers every tensor of the selected variant under deterministic names.

    Weights ~ N(0, 1/fan_in), biases 0, LN gamma 1 / beta 0, heads scaled by 0.1.
    """
    params = ParamStore()
    init = _Initializer(params, cfg.init_seed)

    init.embedding("encoder.timestep", cfg.horizon, cfg.d_h)
    init.linear("encoder.state", cfg.state_dim, cfg.d_h)
    init.linear("encoder.action", 1, cfg.d_h)
    init.linear("encoder.rtg", 1, cfg.d_h)

    for b in range(cfg.num_blocks):
        if cfg.variant == "clb_dt":
            for stream in STREAMS:
                prefix = f"block{b}.{stream}"
                init.layer_norm(f"{prefix}.ln_attn", cfg.d_h)
                for other in other_streams(stream):
                    init.attention(f"{prefix}.from_{other}", cfg)
                init.feed_forward(prefix, cfg)
        else:
            init.layer_norm(f"block{b}.ln_attn", cfg.d_h)
            init.attention(f"block{b}.attn", cfg)
            init.feed_forward(f"block{b}", cfg)

    init.linear("head.action", cfg.d_h, 1, scale=HEAD_SCALE)
    init.linear("head.rtg", cfg.d_h, 1, scale=HEAD_SCALE)

    logger.info("initialized {} with {} parameters in {} tensors", cfg.variant, params.num_parameters(), len(params))
    return params


def loss_free_params(params: ParamStore, cfg: ModelConfig) -> list[str]:
    """
    Names the heads can never reach: in the last CLB block, the attention
    and feed-forward updates of the streams the heads do not read.
    """
    if cfg.variant != "clb_dt":
        return []
    last = cfg.num_blocks - 1
    prefixes = tuple(f"block{last}.{s}." for s in STREAMS if s != cfg.head_stream)
    return [name for name in params if name.startswith(prefixes) and ".ln_attn." not in name]
