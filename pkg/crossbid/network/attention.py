import math
from collections.abc import Mapping

import torch

from crossbid.base.errors import DimensionError
from crossbid.kernel.ops import DTYPE, linear, matmul, softmax_last


def attention_mask(valid: torch.Tensor, fill: float = -1e4) -> torch.Tensor:
    """
    Additive causal mask (B, M, M) from a (B, M) validity mask.

    Position i may attend to j iff j <= i and both i and j are valid;
    disallowed entries hold `fill`, allowed ones 0.
    """
    if valid.dim() != 2:
        raise DimensionError(f"validity mask must be (batch, length), got {tuple(valid.shape)}")
    length = valid.shape[1]
    causal = torch.ones(length, length, dtype=torch.bool).tril()
    allowed = causal.unsqueeze(0) & valid.unsqueeze(2) & valid.unsqueeze(1)
    return torch.where(allowed, torch.zeros((), dtype=DTYPE), torch.full((), fill, dtype=DTYPE))


def attend(q: torch.Tensor, k: torch.Tensor, v: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
    """softmax(Q K^T / sqrt(d_k) + mask) V, with query rows that own no allowed key zeroed."""
    length = q.shape[-2]
    if mask.shape[-2:] != (length, k.shape[-2]):
        raise DimensionError(f"attention mask {tuple(mask.shape)} does not fit {length}x{k.shape[-2]} scores")
    scores = matmul(q, k.transpose(-2, -1)) / math.sqrt(q.shape[-1])
    weights = softmax_last(scores + mask)
    out = matmul(weights, v)
    # padded queries: the diagonal is allowed for every valid query
    query_valid = torch.diagonal(mask, dim1=-2, dim2=-1) == 0
    return torch.where(query_valid.unsqueeze(-1), out, torch.zeros((), dtype=DTYPE))


def masked_cross_attention(
        x_stream: torch.Tensor,
        y_stream: torch.Tensor,
        params: Mapping[str, torch.Tensor],
        prefix: str,
        mask: torch.Tensor,
) -> torch.Tensor:
    """Queries from `x_stream`, keys and values from `y_stream`."""
    if x_stream.shape != y_stream.shape:
        raise DimensionError(f"cross-attention streams differ: {tuple(x_stream.shape)} vs {tuple(y_stream.shape)}")
    q = linear(x_stream, params[f"{prefix}.q.weight"], params[f"{prefix}.q.bias"])
    k = linear(y_stream, params[f"{prefix}.k.weight"], params[f"{prefix}.k.bias"])
    v = linear(y_stream, params[f"{prefix}.v.weight"], params[f"{prefix}.v.bias"])
    return attend(q, k, v, mask)
