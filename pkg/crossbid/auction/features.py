import numpy as np

from crossbid.auction.model import STATE_DIM, EpisodeLog
from crossbid.base.errors import StepIndexError


def compute_state_features(log: EpisodeLog, t: int) -> np.ndarray:
    """
    State s_t observed before acting at step t, from the first t steps of `log`.

    Order: remaining budget, remaining steps (T-t)/T, last-step win rate,
    last-step average cost per win, cumulative cost-rate, budget consumed
    fraction, last action.
    """
    cfg = log.campaign
    horizon = cfg.horizon
    if not 0 <= t <= horizon:
        raise StepIndexError(f"step {t} outside [0, {horizon}]")
    if t > len(log.steps):
        raise StepIndexError(f"step {t} needs {t} recorded steps, log has {len(log.steps)}")

    features = np.zeros(STATE_DIM, dtype=np.float64)
    spent = log.steps[t - 1].cumulative_cost if t > 0 else 0.0
    value = log.steps[t - 1].cumulative_value if t > 0 else 0.0
    features[0] = cfg.budget - spent
    features[1] = (horizon - t) / horizon
    if t > 0:
        last = log.steps[t - 1]
        features[2] = last.wins / last.impressions if last.impressions else 0.0
        features[3] = last.cost / last.wins if last.wins else 0.0
        features[6] = last.action
    features[4] = spent / value if value > 0 else 0.0
    features[5] = spent / cfg.budget if cfg.budget > 0 else 0.0
    return features
