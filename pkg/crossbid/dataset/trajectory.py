from dataclasses import dataclass, replace

import numpy as np

from crossbid.auction._config import CampaignConfig
from crossbid.auction.model import STATE_DIM, EpisodeLog
from crossbid.base.errors import ConfigError, DomainError
from crossbid.loss._config import PenaltyConfig
from crossbid.loss.penalty import PenaltyBreakdown, total_penalty


def compute_rtg(rewards: np.ndarray) -> np.ndarray:
    """Suffix sums: rtg[t] = rewards[t] + rtg[t+1], rtg[T-1] = rewards[T-1]."""
    rewards = np.asarray(rewards, dtype=np.float64)
    if rewards.ndim != 1 or rewards.size == 0:
        raise DomainError(f"compute_rtg needs a nonempty vector, got shape {rewards.shape}")
    rtg = np.empty_like(rewards)
    running = 0.0
    for t in range(rewards.size - 1, -1, -1):
        running = rewards[t] + running
        rtg[t] = running
    return rtg


@dataclass
class Trajectory:
    episode_id: int
    campaign: CampaignConfig
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    rtg: np.ndarray
    timesteps: np.ndarray
    penalty: PenaltyBreakdown

    @classmethod
    def from_episode(cls, log: EpisodeLog, penalty_cfg: PenaltyConfig) -> "Trajectory":
        rewards = log.rewards
        return cls(
            episode_id=log.episode_id,
            campaign=log.campaign,
            states=log.states,
            actions=log.actions,
            rewards=rewards,
            rtg=compute_rtg(rewards),
            timesteps=np.arange(len(log), dtype=np.int64),
            penalty=total_penalty(log, log.campaign, penalty_cfg),
        )

    def __len__(self) -> int:
        return int(self.actions.size)

    @property
    def prev_actions(self) -> np.ndarray:
        """a_{t-1} aligned with step t; 0 before the first step."""
        return np.concatenate([[0.0], self.actions[:-1]])

    @property
    def cpa_T(self) -> float:
        return self.penalty.cpa_T

    @property
    def bc_T(self) -> float:
        return self.penalty.bc_T

    def with_features(self, states: np.ndarray, rtg: np.ndarray) -> "Trajectory":
        return replace(self, states=states, rtg=rtg)


@dataclass
class TrainingSegment:
    """
    Window of M steps ending at `end_t`, left-padded with zeros.

    `prev_actions` feeds the action stream; `actions` and `rtg` are the
    per-position targets. `mask` is False on padded positions.
    """

    episode_id: int
    end_t: int
    states: np.ndarray
    prev_actions: np.ndarray
    actions: np.ndarray
    rtg: np.ndarray
    timesteps: np.ndarray
    mask: np.ndarray
    penalty: float

    @property
    def window(self) -> int:
        return int(self.mask.size)

    @property
    def valid_length(self) -> int:
        return int(self.mask.sum())

    @property
    def target_actions(self) -> np.ndarray:
        return self.actions


def _left_pad(x: np.ndarray, width: int) -> np.ndarray:
    if width == 0:
        return x
    pad = [(width, 0)] + [(0, 0)] * (x.ndim - 1)
    return np.pad(x, pad)


def build_segments(traj: Trajectory, window: int) -> list[TrainingSegment]:
    """One segment per step of `traj`, each carrying the trajectory's terminal penalty."""
    if window <= 0:
        raise ConfigError(f"window length must be positive, got {window}")
    if traj.states.shape != (len(traj), STATE_DIM):
        raise DomainError(f"trajectory states have shape {traj.states.shape}")

    prev_actions = traj.prev_actions
    segments = []
    for t in range(len(traj)):
        start = max(0, t - window + 1)
        pad = window - (t + 1 - start)
        sl = slice(start, t + 1)
        segments.append(
            TrainingSegment(
                episode_id=traj.episode_id,
                end_t=t,
                states=_left_pad(traj.states[sl], pad),
                prev_actions=_left_pad(prev_actions[sl], pad),
                actions=_left_pad(traj.actions[sl], pad),
                rtg=_left_pad(traj.rtg[sl], pad),
                timesteps=_left_pad(traj.timesteps[sl], pad),
                mask=_left_pad(np.ones(t + 1 - start, dtype=bool), pad),
                penalty=traj.penalty.p_total,
            )
        )
    return segments
