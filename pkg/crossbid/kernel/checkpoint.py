import json
from pathlib import Path

import torch
from loguru import logger
from safetensors import safe_open
from safetensors.torch import save_file

from crossbid.base.errors import CrossbidIOError, DatasetFormatError
from crossbid.kernel.ops import DTYPE
from crossbid.kernel.params import ParamStore

CHECKPOINT_KIND = "crossbid-checkpoint/1"
MOMENT_PREFIX = "__adamw__"


def save_checkpoint(
        path: Path,
        params: ParamStore,
        metadata: dict[str, str] | None = None,
        include_moments: bool = True,
) -> Path:
    """
    Writes parameters (and optionally AdamW moments) as a safetensors container.

    The container header lists name, dtype F64 and shape for every tensor,
    followed by the raw little-endian payload. Registration order and step
    counters live in the string metadata map.
    """
    tensors: dict[str, torch.Tensor] = {}
    steps: dict[str, int] = {}
    for name, param in params.items():
        tensors[name] = param.detach().to(DTYPE).contiguous()
        if include_moments:
            m, v, step = params.moments(name)
            tensors[f"{MOMENT_PREFIX}/m/{name}"] = m.to(DTYPE).contiguous()
            tensors[f"{MOMENT_PREFIX}/v/{name}"] = v.to(DTYPE).contiguous()
            steps[name] = step

    header = dict(metadata or {})
    header["kind"] = CHECKPOINT_KIND
    header["param_order"] = json.dumps(list(params.keys()))
    header["adamw_steps"] = json.dumps(steps)

    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        save_file(tensors, str(path), metadata=header)
    except OSError as e:
        raise CrossbidIOError(f"cannot write checkpoint {path}: {e}") from e
    logger.info("saved checkpoint {} ({} tensors)", path, len(params))
    return path


def load_checkpoint(path: Path) -> tuple[ParamStore, dict[str, str]]:
    path = Path(path)
    if not path.exists():
        raise CrossbidIOError(f"checkpoint {path} does not exist")
    with safe_open(str(path), framework="pt") as f:
        metadata = dict(f.metadata() or {})
        if metadata.get("kind") != CHECKPOINT_KIND:
            raise DatasetFormatError(f"{path} is not a {CHECKPOINT_KIND} container")
        order = json.loads(metadata["param_order"])
        steps = json.loads(metadata.get("adamw_steps", "{}"))
        keys = set(f.keys())

        params = ParamStore()
        for name in order:
            params.register(name, f.get_tensor(name))
        for name in order:
            m_key, v_key = f"{MOMENT_PREFIX}/m/{name}", f"{MOMENT_PREFIX}/v/{name}"
            if m_key in keys and v_key in keys:
                params.load_moments(name, f.get_tensor(m_key), f.get_tensor(v_key), int(steps.get(name, 0)))

    logger.debug("loaded checkpoint {} ({} tensors)", path, len(params))
    return params, metadata
