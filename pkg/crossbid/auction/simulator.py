import math
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from typing import Sequence

import numpy as np
from loguru import logger

from crossbid.auction._config import CampaignConfig, LinearPolicySpec
from crossbid.auction.features import compute_state_features
from crossbid.auction.mechanism import resolve_step
from crossbid.auction.model import EpisodeLog, StepRecord
from crossbid.auction.policies import BiddingPolicy, LinearPolicy
from crossbid.base.errors import ConfigError, PolicyError
from crossbid.base.utils import numpy_rng, spawn_seeds


class Market:
    """Impression stream of one campaign; draws depend only on the campaign seed."""

    def __init__(self, cfg: CampaignConfig) -> None:
        self.cfg = cfg
        self._rng = np.random.default_rng(cfg.seed)

    def competition_location(self, t: int) -> float:
        cfg = self.cfg
        phase = 2.0 * math.pi * t / cfg.horizon
        return cfg.competition_mean + cfg.competition_daily_amplitude * math.sin(phase)

    def draw(self, t: int) -> tuple[np.ndarray, np.ndarray]:
        cfg = self.cfg
        n = cfg.impressions_per_step
        values = self._rng.lognormal(cfg.value_mean, cfg.value_sigma, n)
        competing = self._rng.lognormal(self.competition_location(t), cfg.competition_sigma, n)
        return values, competing


def simulate_episode(
        policy: BiddingPolicy,
        cfg: CampaignConfig,
        episode_id: int = 0,
        keep_impressions: bool = True,
) -> EpisodeLog:
    """Rolls `policy` out over the campaign horizon against a seeded market."""
    log = EpisodeLog(campaign=cfg, episode_id=episode_id, seed=cfg.seed)
    market = Market(cfg)
    spent = Fraction(0)
    value_total = 0.0

    for t in range(cfg.horizon):
        state = compute_state_features(log, t)
        lambda_t = float(policy(t, state, log))
        if not math.isfinite(lambda_t) or lambda_t < 0:
            raise PolicyError(f"episode {episode_id}: policy returned {lambda_t} at step {t}")

        values, competing = market.draw(t)
        won, spent_after = resolve_step(lambda_t, values, competing, spent, cfg.budget)
        step_cost = float(spent_after - spent)
        reward = float(values[won].sum())
        value_total = value_total + reward
        log.steps.append(
            StepRecord(
                t=t,
                action=lambda_t,
                state=state,
                reward=reward,
                cost=step_cost,
                wins=int(won.sum()),
                impressions=cfg.impressions_per_step,
                cumulative_cost=float(spent_after),
                cumulative_value=value_total,
                values=values if keep_impressions else None,
                competing_bids=competing if keep_impressions else None,
                won=won if keep_impressions else None,
            )
        )
        spent = spent_after

    logger.trace(
        "episode {} done: cost={:.3f} value={:.3f} wins={}", episode_id, log.total_cost, log.total_value, log.total_wins
    )
    return log


def generate_synthetic_dataset(
        cfg: CampaignConfig,
        num_episodes: int,
        policy_mixture: Sequence[LinearPolicySpec],
        workers: int = 1,
        keep_impressions: bool = False,
) -> list[EpisodeLog]:
    """
    Offline dataset of episodes from a mixture of noisy linear policies.

    Episode i uses the i-th seed spawned from `cfg.seed` both for its market
    and for picking and driving its behaviour policy, so the output does not
    depend on `workers`.
    """
    if num_episodes < 1:
        raise ConfigError(f"num_episodes must be >= 1, got {num_episodes}")
    if not policy_mixture:
        raise ConfigError("policy mixture is empty")

    seeds = spawn_seeds(cfg.seed, num_episodes)

    def run(episode_id: int) -> EpisodeLog:
        seed = seeds[episode_id]
        rng = numpy_rng(seed, 1)
        spec = policy_mixture[int(rng.integers(len(policy_mixture)))]
        policy = LinearPolicy(spec, cfg.cpa_threshold, seed=int(rng.integers(2**62)))
        campaign = cfg.model_copy(update={"seed": seed})
        return simulate_episode(policy, campaign, episode_id=episode_id, keep_impressions=keep_impressions)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            episodes = list(executor.map(run, range(num_episodes)))
    else:
        episodes = [run(i) for i in range(num_episodes)]

    logger.info("generated {} episodes from a mixture of {} policies", num_episodes, len(policy_mixture))
    return episodes
