"""Autoregressive bidding with a trained network inside the auction simulator."""
from collections.abc import Mapping

import numpy as np
import torch
from loguru import logger

from crossbid.auction._config import CampaignConfig
from crossbid.auction.model import EpisodeLog
from crossbid.auction.simulator import simulate_episode
from crossbid.base.errors import DomainError, InferenceError
from crossbid.dataset.batch import SegmentBatch
from crossbid.dataset.normalize import NormStats
from crossbid.network._config import ModelConfig
from crossbid.network.forward import model_forward


def conditioning_rtg(target_rtg: float, rewards: np.ndarray) -> np.ndarray:
    """RTG fed at each step k: target minus rewards realized before k, floored at 0."""
    realized = np.concatenate([[0.0], np.cumsum(rewards)])
    return np.maximum(target_rtg - realized, 0.0)


class DecisionTransformerPolicy:
    """
    BiddingPolicy that conditions on the last `window` steps of its own episode.

    The action stream carries a_{k-1} at position k (CLB-DT); vanilla DT sees
    the realized a_k for past steps and 0 in the current, undecided slot.
    """

    def __init__(
            self,
            params: Mapping[str, torch.Tensor],
            cfg: ModelConfig,
            stats: NormStats,
            target_rtg: float,
    ) -> None:
        if not target_rtg >= 0:
            raise DomainError(f"target RTG must be nonnegative, got {target_rtg}")
        self.params = params
        self.cfg = cfg
        self.stats = stats
        self.target_rtg = target_rtg
        self.conditioning: list[float] = []

    def _batch(self, t: int, state: np.ndarray, history: EpisodeLog) -> SegmentBatch:
        start = max(0, t - self.cfg.window + 1)
        past = history.steps[start:t]

        states = np.stack([s.state for s in past] + [state])
        actions = np.array([s.action for s in past] + [0.0])
        before = history.steps[start - 1].action if start > 0 else 0.0
        prev_actions = np.concatenate([[before], actions[:-1]])
        rtg = conditioning_rtg(self.target_rtg, history.rewards)[start:t + 1]
        self.conditioning.append(float(rtg[-1]))

        length = t + 1 - start
        return SegmentBatch.from_arrays(
            states=self.stats.normalize_states(states)[None],
            prev_actions=prev_actions[None],
            actions=actions[None],
            rtg=self.stats.normalize_rtg(rtg)[None],
            timesteps=np.arange(start, t + 1)[None],
            mask=np.ones((1, length), dtype=bool),
            penalties=np.ones(1),
        )

    def __call__(self, t: int, state: np.ndarray, history: EpisodeLog) -> float:
        batch = self._batch(t, state, history)
        with torch.no_grad():
            a_hat, _ = model_forward(batch, self.params, self.cfg, training=False)
        action = float(a_hat[0, -1])
        if not np.isfinite(action):
            raise InferenceError(f"model produced {action} at step {t}")
        return max(action, 0.0)


def rollout_inference(
        params: Mapping[str, torch.Tensor],
        model_cfg: ModelConfig,
        stats: NormStats,
        campaign: CampaignConfig,
        target_rtg: float,
        episode_id: int = 0,
) -> EpisodeLog:
    policy = DecisionTransformerPolicy(params, model_cfg, stats, target_rtg)
    try:
        log = simulate_episode(policy, campaign, episode_id=episode_id, keep_impressions=False)
    except InferenceError:
        logger.error("episode {} aborted during inference", episode_id)
        raise
    logger.debug("rollout {} value={:.3f} cost={:.3f}", episode_id, log.total_value, log.total_cost)
    return log
