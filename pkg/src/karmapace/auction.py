"""One-round clearing of the capacity-winner generalized second-price auction.

Winners in each auction are its top-``capacity`` bidders; every winner pays
that auction's (capacity+1)-th highest bid, and the aggregate payment is
redistributed uniformly over the whole population. Ties are broken by a
per-round random strict priority order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import CompetingBidModel, Empirical, MechanismParams

__all__ = ["RoundBids", "PeriodOutcome", "clear_auction", "residual_gain", "ResidualGain"]


@dataclass(frozen=True)
class RoundBids:
    """Sealed bids for one round plus each agent's auction assignment."""

    bids: np.ndarray
    assignment: np.ndarray

    def __post_init__(self):
        bids = np.asarray(self.bids, dtype=float)
        assignment = np.asarray(self.assignment)
        if bids.ndim != 1 or assignment.shape != bids.shape:
            raise ValueError("bids and assignment must be equal-length vectors")
        if np.any(bids < 0):
            raise ValueError("bids must be nonnegative")
        object.__setattr__(self, "bids", bids)
        object.__setattr__(self, "assignment", assignment.astype(np.int64))


@dataclass
class PeriodOutcome:
    """Everything settled in one auction round."""

    winners: np.ndarray           # bool, per agent
    price_per_auction: np.ndarray  # per auction
    payments: np.ndarray           # per agent
    gains: np.ndarray              # per agent, identical entries
    competing_bid_hi: np.ndarray   # top competing bid faced by each agent
    competing_bid_lo: np.ndarray   # second-top competing bid faced by each agent
    costs: np.ndarray | None = None
    saved: np.ndarray | None = None


def clear_auction(
    bids: RoundBids,
    params: MechanismParams,
    tie_stream: np.random.Generator | None = None,
    priorities: np.ndarray | None = None,
    valuations: np.ndarray | None = None,
) -> PeriodOutcome:
    """Clear all parallel auctions of one round.

    ``priorities`` (larger wins ties) may be supplied directly for paired
    runs; otherwise they are drawn from ``tie_stream``. When no source of
    tie-breaking is given, lower agent index wins ties.

    An auction with fewer than capacity+1 participants clears at price zero
    with every participant winning; competing-bid statistics over the other
    participants are zero-padded accordingly.
    """
    b = bids.bids
    assignment = bids.assignment
    n = b.shape[0]
    if n != params.n_agents:
        raise ValueError("bid vector length must equal n_agents")
    if np.any(assignment < 0) or np.any(assignment >= params.n_auctions):
        raise ValueError("assignment values must lie in [0, n_auctions)")
    if priorities is None:
        if tie_stream is not None:
            priorities = tie_stream.random(n)
        else:
            priorities = -np.arange(n, dtype=float)
    gamma = params.capacity

    winners = np.zeros(n, dtype=bool)
    prices = np.zeros(params.n_auctions)
    payments = np.zeros(n)
    d_hi = np.zeros(n)
    d_lo = np.zeros(n)

    for m in range(params.n_auctions):
        members = np.nonzero(assignment == m)[0]
        p_count = members.shape[0]
        if p_count == 0:
            continue
        order = members[np.lexsort((-priorities[members], -b[members]))]
        ranked = b[order]

        def kth(k: int) -> float:  # 1-based order statistic, zero-padded
            return ranked[k - 1] if k <= p_count else 0.0

        if p_count >= gamma + 1:
            price = kth(gamma + 1)
            win_set = order[:gamma]
        else:
            price = 0.0
            win_set = order
        prices[m] = price
        winners[win_set] = True
        payments[win_set] = price

        for rank0, agent in enumerate(order):
            r = rank0 + 1
            d_hi[agent] = kth(gamma + 1) if r <= gamma else kth(gamma)
            d_lo[agent] = kth(gamma + 2) if r <= gamma + 1 else kth(gamma + 1)

    gain = params.gain_share * prices.sum()
    gains = np.full(n, gain)

    costs = saved = None
    if valuations is not None:
        v = np.asarray(valuations, dtype=float)
        x = winners.astype(float)
        costs = v * (1.0 - x * params.time_saving)
        saved = x * params.time_saving * v
    return PeriodOutcome(winners, prices, payments, gains, d_hi, d_lo, costs, saved)


@dataclass(frozen=True)
class ResidualGain:
    estimate: float
    stderr: float
    n_samples: int


def residual_gain(
    model: CompetingBidModel,
    gain_share: float,
    n_samples: int,
    stream: np.random.Generator | None = None,
) -> ResidualGain:
    """Expected extra gain available to a loser that sets the price itself.

    Monte-Carlo estimate of gain_share * E[top - second-top competing bid].
    Empirical models are averaged exactly over their stored pairs.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if isinstance(model, Empirical):
        hi, lo = model.as_arrays()
    else:
        if stream is None:
            raise ValueError("a stream is required for sampled models")
        hi, lo = model.sample_pairs(stream, n_samples)
    diffs = gain_share * (hi - lo)
    n = diffs.shape[0]
    se = float(diffs.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return ResidualGain(float(diffs.mean()), se, n)
