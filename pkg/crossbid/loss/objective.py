import torch

from crossbid.base.errors import ContractError, DimensionError
from crossbid.kernel.ops import check_finite
from crossbid.loss._config import LossConfig


def _weighted_masked_mse(
        pred: torch.Tensor,
        target: torch.Tensor,
        penalties: torch.Tensor,
        mask: torch.Tensor,
        what: str,
) -> torch.Tensor:
    if pred.shape != target.shape or mask.shape != pred.shape:
        raise DimensionError(
            f"{what}: prediction {tuple(pred.shape)}, target {tuple(target.shape)} and mask {tuple(mask.shape)} differ"
        )
    if penalties.shape != pred.shape:
        # one penalty per sample, shared by all of its positions
        if penalties.dim() != 1 or penalties.shape[0] != pred.shape[0]:
            raise DimensionError(f"{what}: penalties {tuple(penalties.shape)} do not fit {tuple(pred.shape)}")
        penalties = penalties.unsqueeze(-1).expand_as(pred)
    mask = mask.to(torch.bool)
    count = int(mask.sum())
    if count == 0:
        raise ContractError(f"{what}: every position is masked")
    weighted = torch.where(mask, penalties * (pred - target) ** 2, torch.zeros_like(pred))
    return weighted.sum() / count


def action_loss(pred: torch.Tensor, target: torch.Tensor, penalties: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
    """(1/N) sum_n P_n (a_hat_n - a*_n)^2 over the N valid positions."""
    return _weighted_masked_mse(pred, target, penalties, mask, "action_loss")


def rtg_loss(pred: torch.Tensor, target: torch.Tensor, penalties: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
    return _weighted_masked_mse(pred, target, penalties, mask, "rtg_loss")


def total_loss(l_action: torch.Tensor, l_rtg: torch.Tensor, cfg: LossConfig) -> torch.Tensor:
    check_finite(l_action, "action loss")
    check_finite(l_rtg, "rtg loss")
    return l_action + cfg.rtg_weight * l_rtg
