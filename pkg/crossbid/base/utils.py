import hashlib
import json
from pathlib import Path
from typing import Any

import numpy as np
import torch
from loguru import logger
from pydantic import BaseModel

from crossbid.base.errors import CrossbidIOError

FINGERPRINT_LENGTH = 16


def spawn_seeds(seed: int, count: int) -> list[int]:
    """
    Derives `count` independent child seeds from `seed`.
    The i-th child only depends on (seed, i), never on `count`.
    """
    children = np.random.SeedSequence(seed).spawn(count)
    return [int(child.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1)) for child in children]


def derive_seed(*parts: int) -> int:
    state = np.random.SeedSequence([int(p) for p in parts]).generate_state(1, dtype=np.uint64)
    return int(state[0] >> np.uint64(1))


def numpy_rng(*parts: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(*parts))


def torch_generator(*parts: int) -> torch.Generator:
    return torch.Generator().manual_seed(derive_seed(*parts))


def flatten_dict(data: dict[str, Any], prefix: str = "") -> dict[str, Any]:
    flat: dict[str, Any] = {}
    for key, value in data.items():
        name = f"{prefix}.{key}" if prefix else key
        if isinstance(value, dict):
            flat.update(flatten_dict(value, name))
        else:
            flat[name] = value
    return flat


def fingerprint(config: BaseModel | dict[str, Any], exclude: set[str] | None = None) -> str:
    data = config.model_dump(mode="json", exclude=exclude) if isinstance(config, BaseModel) else config
    payload = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()[:FINGERPRINT_LENGTH]


def config_diff(a: BaseModel, b: BaseModel, exclude: set[str] | None = None) -> set[str]:
    """Dotted names of every leaf field whose value differs between two configs."""
    flat_a = flatten_dict(a.model_dump(mode="json", exclude=exclude))
    flat_b = flatten_dict(b.model_dump(mode="json", exclude=exclude))
    keys = flat_a.keys() | flat_b.keys()
    return {k for k in keys if flat_a.get(k) != flat_b.get(k)}


def file_digest(path: Path) -> str:
    digest = hashlib.sha256()
    try:
        with open(path, "rb") as f:
            for chunk in iter(lambda: f.read(1 << 20), b""):
                digest.update(chunk)
    except OSError as e:
        raise CrossbidIOError(f"cannot read {path}: {e}") from e
    logger.debug("digest of {}: {}", path, digest.hexdigest()[:FINGERPRINT_LENGTH])
    return digest.hexdigest()[:FINGERPRINT_LENGTH]
