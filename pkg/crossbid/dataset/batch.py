from dataclasses import dataclass, fields
from typing import Sequence

import numpy as np
import torch

from crossbid.base.errors import ConfigError
from crossbid.dataset.trajectory import TrainingSegment
from crossbid.kernel.ops import DTYPE


@dataclass
class SegmentBatch:
    states: torch.Tensor       # (B, M, d_s)
    prev_actions: torch.Tensor  # (B, M)
    actions: torch.Tensor      # (B, M)
    rtg: torch.Tensor          # (B, M)
    timesteps: torch.Tensor    # (B, M) int64
    mask: torch.Tensor         # (B, M) bool
    penalties: torch.Tensor    # (B,)

    @property
    def size(self) -> int:
        return int(self.states.shape[0])

    @property
    def window(self) -> int:
        return int(self.states.shape[1])

    def replace(self, **changes: torch.Tensor) -> "SegmentBatch":
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update(changes)
        return SegmentBatch(**values)

    @classmethod
    def from_arrays(cls, **arrays: np.ndarray) -> "SegmentBatch":
        return cls(
            states=torch.as_tensor(arrays["states"], dtype=DTYPE),
            prev_actions=torch.as_tensor(arrays["prev_actions"], dtype=DTYPE),
            actions=torch.as_tensor(arrays["actions"], dtype=DTYPE),
            rtg=torch.as_tensor(arrays["rtg"], dtype=DTYPE),
            timesteps=torch.as_tensor(arrays["timesteps"], dtype=torch.int64),
            mask=torch.as_tensor(arrays["mask"], dtype=torch.bool),
            penalties=torch.as_tensor(arrays["penalties"], dtype=DTYPE),
        )

    @classmethod
    def from_segments(cls, segments: Sequence[TrainingSegment]) -> "SegmentBatch":
        return SegmentBank(segments).take(np.arange(len(segments)))


class SegmentBank:
    """All training segments stacked once so batches are cheap fancy-index views."""

    def __init__(self, segments: Sequence[TrainingSegment]) -> None:
        if not segments:
            raise ConfigError("segment bank needs at least one segment")
        self.episode_ids = np.array([s.episode_id for s in segments], dtype=np.int64)
        self.states = np.stack([s.states for s in segments])
        self.prev_actions = np.stack([s.prev_actions for s in segments])
        self.actions = np.stack([s.actions for s in segments])
        self.rtg = np.stack([s.rtg for s in segments])
        self.timesteps = np.stack([s.timesteps for s in segments])
        self.mask = np.stack([s.mask for s in segments])
        self.penalties = np.array([s.penalty for s in segments], dtype=np.float64)

    def __len__(self) -> int:
        return int(self.penalties.size)

    def take(self, indices: np.ndarray) -> SegmentBatch:
        return SegmentBatch.from_arrays(
            states=self.states[indices],
            prev_actions=self.prev_actions[indices],
            actions=self.actions[indices],
            rtg=self.rtg[indices],
            timesteps=self.timesteps[indices],
            mask=self.mask[indices],
            penalties=self.penalties[indices],
        )

    def sample(self, batch_size: int, rng: np.random.Generator) -> SegmentBatch:
        """Uniform sampling with replacement."""
        if batch_size < 1:
            raise ConfigError(f"batch size must be >= 1, got {batch_size}")
        return self.take(rng.integers(0, len(self), size=batch_size))
