from typing import Sequence

import numpy as np
from pydantic import BaseModel

from crossbid.base.errors import ConfigError
from crossbid.dataset.trajectory import Trajectory


class NormStats(BaseModel):
    """Per-dimension z-score statistics; a zero-variance column keeps mean 0 and std 1."""

    state_mean: list[float]
    state_std: list[float]
    rtg_mean: float
    rtg_std: float
    max_return: float

    def normalize_states(self, states: np.ndarray) -> np.ndarray:
        return (states - np.asarray(self.state_mean)) / np.asarray(self.state_std)

    def denormalize_states(self, states: np.ndarray) -> np.ndarray:
        return states * np.asarray(self.state_std) + np.asarray(self.state_mean)

    def normalize_rtg(self, rtg):
        return (rtg - self.rtg_mean) / self.rtg_std

    def denormalize_rtg(self, rtg):
        return rtg * self.rtg_std + self.rtg_mean

    def apply(self, traj: Trajectory) -> Trajectory:
        return traj.with_features(self.normalize_states(traj.states), self.normalize_rtg(traj.rtg))

    def invert(self, traj: Trajectory) -> Trajectory:
        return traj.with_features(self.denormalize_states(traj.states), self.denormalize_rtg(traj.rtg))


def _column_stats(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    constant = std == 0
    return np.where(constant, 0.0, mean), np.where(constant, 1.0, std)


def fit_norm_stats(trajectories: Sequence[Trajectory]) -> NormStats:
    if not trajectories:
        raise ConfigError("cannot fit normalization statistics on an empty dataset")
    states = np.concatenate([t.states for t in trajectories])
    rtg = np.concatenate([t.rtg for t in trajectories])[:, None]
    state_mean, state_std = _column_stats(states)
    rtg_mean, rtg_std = _column_stats(rtg)
    return NormStats(
        state_mean=state_mean.tolist(),
        state_std=state_std.tolist(),
        rtg_mean=float(rtg_mean[0]),
        rtg_std=float(rtg_std[0]),
        max_return=float(max(t.rtg[0] for t in trajectories)),
    )


def normalize_features(
        trajectories: Sequence[Trajectory],
        stats: NormStats | None = None,
) -> tuple[list[Trajectory], NormStats]:
    """Z-normalizes states and RTG; statistics are fitted on `trajectories` unless given."""
    stats = stats or fit_norm_stats(trajectories)
    return [stats.apply(t) for t in trajectories], stats
