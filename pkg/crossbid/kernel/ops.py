"""
Dense float64 tensor operations with the shape contracts the model relies on.

Tensors are `torch.Tensor` in float64; gradients come from torch autograd.
Every op raises a `DimensionError` naming the offending shapes instead of
letting torch broadcast silently.
"""
import torch
import torch.nn.functional as F

from crossbid.base.errors import ConfigError, ContractError, DimensionError, NumericError

DTYPE = torch.float64
MAX_RANK = 3


def tensor(values, requires_grad: bool = False) -> torch.Tensor:
    if isinstance(values, torch.Tensor):
        out = values.detach().clone().to(DTYPE)
    else:
        out = torch.tensor(values, dtype=DTYPE)
    return out.requires_grad_(requires_grad)


def check_finite(x: torch.Tensor, what: str = "tensor") -> torch.Tensor:
    if not bool(torch.isfinite(x).all()):
        raise NumericError(f"{what} contains NaN or Inf values (shape {tuple(x.shape)})")
    return x


def matmul(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """Matrix product with at most one leading batch dimension on either side."""
    if not (2 <= a.dim() <= MAX_RANK and 2 <= b.dim() <= MAX_RANK):
        raise DimensionError(f"matmul expects rank 2 or 3 operands, got {tuple(a.shape)} and {tuple(b.shape)}")
    if a.shape[-1] != b.shape[-2]:
        raise DimensionError(f"matmul inner dimensions differ: {tuple(a.shape)} x {tuple(b.shape)}")
    if a.dim() == 3 and b.dim() == 3 and a.shape[0] != b.shape[0]:
        raise DimensionError(f"matmul batch dimensions differ: {tuple(a.shape)} x {tuple(b.shape)}")
    return torch.matmul(a, b)


def softmax_last(x: torch.Tensor) -> torch.Tensor:
    if x.dim() == 0 or x.numel() == 0 or x.shape[-1] == 0:
        raise DimensionError(f"softmax over an empty last dimension: {tuple(x.shape)}")
    # torch subtracts the slice max before exponentiating
    return torch.softmax(x, dim=-1)


def layer_norm(h: torch.Tensor, gamma: torch.Tensor, beta: torch.Tensor, eps: float = 1e-5) -> torch.Tensor:
    """Per-position normalization over the hidden (last) dimension, then gamma * x + beta."""
    d_h = h.shape[-1]
    if gamma.shape != (d_h,) or beta.shape != (d_h,):
        raise DimensionError(
            f"layer_norm affine parameters {tuple(gamma.shape)}/{tuple(beta.shape)} do not match hidden size {d_h}"
        )
    if eps <= 0:
        raise ConfigError(f"layer_norm eps must be positive, got {eps}")
    return F.layer_norm(h, (d_h,), gamma, beta, eps)


def relu(x: torch.Tensor) -> torch.Tensor:
    return torch.relu(x)


def linear(x: torch.Tensor, weight: torch.Tensor, bias: torch.Tensor | None = None) -> torch.Tensor:
    """x W + 1 b^T with W stored as (d_in, d_out)."""
    if weight.dim() != 2 or x.shape[-1] != weight.shape[0]:
        raise DimensionError(f"linear input {tuple(x.shape)} does not fit weight {tuple(weight.shape)}")
    if x.dim() == 1:
        out = (x.unsqueeze(0) @ weight).squeeze(0)
    else:
        out = matmul(x, weight)
    if bias is not None:
        if bias.shape != (weight.shape[1],):
            raise DimensionError(f"linear bias {tuple(bias.shape)} does not fit weight {tuple(weight.shape)}")
        out = out + bias
    return out


def dropout(
        x: torch.Tensor,
        rate: float = 0.1,
        training: bool = False,
        generator: torch.Generator | None = None,
) -> torch.Tensor:
    """Inverted dropout: survivors are scaled by 1/(1-rate) so eval mode is the identity."""
    if not 0.0 <= rate < 1.0:
        raise ConfigError(f"dropout rate must lie in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x
    keep = torch.rand(x.shape, generator=generator, dtype=DTYPE) >= rate
    return x * keep.to(DTYPE) / (1.0 - rate)


def backward(loss: torch.Tensor) -> None:
    if loss.numel() != 1 or loss.dim() > 1:
        raise ContractError(f"backward needs a scalar loss, got shape {tuple(loss.shape)}")
    if not loss.requires_grad:
        raise ContractError("backward called on a loss with no recorded graph")
    check_finite(loss, "loss")
    loss.backward()

