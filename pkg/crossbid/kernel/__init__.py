from crossbid.kernel.checkpoint import load_checkpoint, save_checkpoint
from crossbid.kernel.ops import (
    DTYPE,
    backward,
    check_finite,
    dropout,
    layer_norm,
    linear,
    matmul,
    relu,
    softmax_last,
    tensor,
)
from crossbid.kernel.params import ParamStore, adamw_step

__all__ = [
    "DTYPE",
    "ParamStore",
    "adamw_step",
    "backward",
    "check_finite",
    "dropout",
    "layer_norm",
    "linear",
    "load_checkpoint",
    "matmul",
    "relu",
    "save_checkpoint",
    "softmax_last",
    "tensor",
]
