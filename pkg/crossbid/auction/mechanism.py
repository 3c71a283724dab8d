import math
from fractions import Fraction

import numpy as np

from crossbid.auction.model import AuctionOutcome, ImpressionOpportunity
from crossbid.base.errors import DomainError


def bid_from_action(lambda_t: float, value: float) -> float:
    """b = lambda_t * v_i."""
    if not (math.isfinite(lambda_t) and math.isfinite(value)) or lambda_t < 0 or value < 0:
        raise DomainError(f"bid_from_action needs finite nonnegative inputs, got lambda={lambda_t}, v={value}")
    return lambda_t * value


def run_gsp_auction(bid: float, opp: ImpressionOpportunity) -> AuctionOutcome:
    """Single-slot GSP: win on strictly exceeding the highest competing bid, pay that bid."""
    if not math.isfinite(bid) or bid < 0:
        raise DomainError(f"bid must be finite and nonnegative, got {bid}")
    if bid > opp.competing_bid:
        return AuctionOutcome(won=1, cost=opp.competing_bid, realized_value=opp.value)
    return AuctionOutcome(won=0, cost=0.0, realized_value=0.0)


def resolve_step(
        lambda_t: float,
        values: np.ndarray,
        competing_bids: np.ndarray,
        spent: Fraction,
        budget: float,
) -> tuple[np.ndarray, Fraction]:
    """
    Resolves one step of auctions in arrival order under the budget gate.

    Spend is carried as an exact rational, so an impression is lost exactly
    when its cost would push cumulative spend above `budget`. Returns the won
    mask and the cumulative spend after the step.
    """
    candidate = lambda_t * values > competing_bids
    won = np.zeros_like(candidate)
    limit = Fraction(budget)
    spent = Fraction(spent)
    for i in np.flatnonzero(candidate):
        after = spent + Fraction(float(competing_bids[i]))
        if after <= limit:
            won[i] = True
            spent = after
    return won, spent
