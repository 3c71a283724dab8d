from crossbid.auction._config import (
    CampaignConfig,
    KpiConstraint,
    LinearPolicySpec,
    ScoreConfig,
    default_policy_mixture,
)
from crossbid.auction.features import compute_state_features
from crossbid.auction.mechanism import bid_from_action, resolve_step, run_gsp_auction
from crossbid.auction.model import (
    STATE_DIM,
    AuctionOutcome,
    EpisodeLog,
    ImpressionOpportunity,
    StepRecord,
)
from crossbid.auction.policies import BiddingPolicy, ConstantPolicy, LinearPolicy
from crossbid.auction.score import ScoreReport, compute_score
from crossbid.auction.simulator import Market, generate_synthetic_dataset, simulate_episode

__all__ = [
    "STATE_DIM",
    "AuctionOutcome",
    "BiddingPolicy",
    "CampaignConfig",
    "ConstantPolicy",
    "EpisodeLog",
    "ImpressionOpportunity",
    "KpiConstraint",
    "LinearPolicy",
    "LinearPolicySpec",
    "Market",
    "ScoreConfig",
    "ScoreReport",
    "StepRecord",
    "bid_from_action",
    "compute_score",
    "compute_state_features",
    "default_policy_mixture",
    "generate_synthetic_dataset",
    "resolve_step",
    "run_gsp_auction",
    "simulate_episode",
]
