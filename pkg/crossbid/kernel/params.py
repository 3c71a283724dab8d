from collections.abc import Iterable, Iterator, Mapping
from typing import Optional

import torch
from loguru import logger

from crossbid.base.errors import ContractError
from crossbid.kernel.ops import DTYPE, tensor


class ParamStore(Mapping[str, torch.Tensor]):
    """
    Ordered registry of trainable float64 tensors plus their AdamW state.

    Names are unique and iterate in registration order. The optimizer is
    created lazily so moments start at zero and the step counter at 0.
    """

    def __init__(self) -> None:
        self._entries: dict[str, torch.Tensor] = {}
        self._optimizer: torch.optim.AdamW | None = None

    def register(self, name: str, value) -> torch.Tensor:
        if name in self._entries:
            raise ContractError(f"parameter '{name}' is already registered")
        if self._optimizer is not None:
            raise ContractError(f"cannot register '{name}' after the optimizer was created")
        param = tensor(value, requires_grad=True)
        self._entries[name] = param
        return param

    def __getitem__(self, name: str) -> torch.Tensor:
        return self._entries[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def num_parameters(self) -> int:
        return sum(p.numel() for p in self._entries.values())

    def zero_grad(self, names: Optional[Iterable[str]] = None) -> None:
        """Materializes zero gradients on `names`, or on every entry, including ones no loss has reached yet."""
        for name in self._entries if names is None else names:
            param = self[name]
            if param.grad is None:
                param.grad = torch.zeros_like(param)
            else:
                param.grad.zero_()

    @property
    def optimizer(self) -> torch.optim.AdamW:
        if self._optimizer is None:
            self._optimizer = torch.optim.AdamW(list(self._entries.values()), foreach=False)
        return self._optimizer

    def moments(self, name: str) -> tuple[torch.Tensor, torch.Tensor, int]:
        """(m, v, step) for one parameter; zeros before the first update."""
        param = self[name]
        state = self.optimizer.state.get(param, {})
        if not state:
            return torch.zeros_like(param), torch.zeros_like(param), 0
        return state["exp_avg"].detach(), state["exp_avg_sq"].detach(), int(state["step"])

    def load_moments(self, name: str, m: torch.Tensor, v: torch.Tensor, step: int) -> None:
        param = self[name]
        if m.shape != param.shape or v.shape != param.shape:
            raise ContractError(f"moment buffers for '{name}' do not match shape {tuple(param.shape)}")
        if step == 0:
            return
        self.optimizer.state[param] = {
            "step": torch.tensor(float(step), dtype=torch.float32),
            "exp_avg": m.detach().clone().to(DTYPE),
            "exp_avg_sq": v.detach().clone().to(DTYPE),
        }

    def copy(self) -> "ParamStore":
        clone = ParamStore()
        for name, param in self._entries.items():
            clone.register(name, param)
        return clone


def adamw_step(
        params: ParamStore,
        lr: float,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
        weight_decay: float = 0.01,
) -> None:
    """One decoupled-weight-decay Adam update over every entry, then zeroes the gradients."""
    for name, param in params.items():
        if param.grad is None:
            raise ContractError(f"adamw_step: parameter '{name}' has no gradient")
    optimizer = params.optimizer
    for group in optimizer.param_groups:
        group.update(lr=lr, betas=(beta1, beta2), eps=eps, weight_decay=weight_decay)
    optimizer.step()
    optimizer.zero_grad(set_to_none=False)
    logger.trace("adamw step with lr={} over {} tensors", lr, len(params))
