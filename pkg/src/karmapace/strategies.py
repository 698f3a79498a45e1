"""Per-agent bidding policies and their multiplier updates.

Two families are implemented as pure state transitions:

* karma pacing — bid time_saving*v / clamp(mu), update mu += eps*(z - g)
  with no projection in the update, so the multiplier may wander outside
  its box while the bid-side clamp keeps bids bounded;
* rate pacing — bid time_saving*v / mu, update mu = clamp(mu + eps*(z - rho)),
  tracking a fixed target expenditure rate, plus a gain-aware variant that
  bids time_saving*v / (1 + mu) and projects onto [0, mu_hi].

The deviation policies at the bottom exist for the unilateral-deviation
harness only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .core import AgentParams

__all__ = [
    "AgentState",
    "KarmaPacing",
    "AdaptivePacing",
    "AdaptivePacingWithGain",
    "ScaledDeviation",
    "TruthfulCapped",
    "HindsightReplay",
    "StrategyKind",
    "bid_K",
    "update_K",
    "bid_A",
    "update_A",
    "bid_A_gain",
    "update_A_gain",
    "HittingTimes",
    "hitting_time",
]


def _clamp(x: float, lo: float, hi: float) -> float:
    return min(max(x, lo), hi)


@dataclass(frozen=True)
class AgentState:
    """Evolving (karma, multiplier) state; round counts from 1."""

    karma: float
    multiplier: float
    round: int = 1


# --- strategy tags ----------------------------------------------------------


@dataclass(frozen=True)
class KarmaPacing:
    pass


@dataclass(frozen=True)
class AdaptivePacing:
    pass


@dataclass(frozen=True)
class AdaptivePacingWithGain:
    pass


@dataclass(frozen=True)
class ScaledDeviation:
    """Scales every bid of ``base`` by ``factor`` while keeping its update."""

    factor: float
    base: "StrategyKind" = field(default_factory=KarmaPacing)

    def __post_init__(self):
        if self.factor <= 0:
            raise ValueError("scale factor must be positive")


@dataclass(frozen=True)
class TruthfulCapped:
    """Bids time_saving*v / multiplier with a frozen multiplier."""

    multiplier: float

    def __post_init__(self):
        if self.multiplier <= 0:
            raise ValueError("multiplier must be positive")


@dataclass(frozen=True)
class HindsightReplay:
    """Replays a precomputed bid plan (budget-capped round by round)."""

    bids: tuple[float, ...]


StrategyKind = Union[
    KarmaPacing,
    AdaptivePacing,
    AdaptivePacingWithGain,
    ScaledDeviation,
    TruthfulCapped,
    HindsightReplay,
]


# --- karma pacing -----------------------------------------------------------


def bid_K(state: AgentState, v: float, delta: float, params: AgentParams) -> float:
    """Budget-capped bid with the multiplier clamped on the bid side only."""
    return min(delta * v / _clamp(state.multiplier, params.mu_lo, params.mu_hi), state.karma)


def update_K(state: AgentState, z: float, g: float, eps_t: float) -> AgentState:
    """Move the multiplier by the realized karma loss; never projects."""
    return AgentState(
        karma=state.karma - z + g,
        multiplier=state.multiplier + eps_t * (z - g),
        round=state.round + 1,
    )


# --- rate pacing ------------------------------------------------------------


def bid_A(state: AgentState, v: float, delta: float, params: AgentParams) -> float:
    return min(delta * v / state.multiplier, state.karma)


def update_A(
    state: AgentState,
    z: float,
    eps_t: float,
    rho: float,
    mu_lo: float,
    mu_hi: float,
    g: float = 0.0,
) -> AgentState:
    """Projected update toward the target rate; ``g`` only credits the budget."""
    return AgentState(
        karma=state.karma - z + g,
        multiplier=_clamp(state.multiplier + eps_t * (z - rho), mu_lo, mu_hi),
        round=state.round + 1,
    )


def bid_A_gain(state: AgentState, v: float, delta: float, params: AgentParams) -> float:
    return min(delta * v / (1.0 + state.multiplier), state.karma)


def update_A_gain(
    state: AgentState,
    z: float,
    g: float,
    eps_t: float,
    rho: float,
    mu_hi: float,
) -> AgentState:
    """Gain-aware rate pacing; projects onto [0, mu_hi] so the multiplier can
    plateau at zero."""
    return AgentState(
        karma=state.karma - z + g,
        multiplier=_clamp(state.multiplier + eps_t * (z - g - rho), 0.0, mu_hi),
        round=state.round + 1,
    )


# --- hitting times ----------------------------------------------------------


@dataclass(frozen=True)
class HittingTimes:
    """Largest prefix lengths over which budget and multiplier stay usable.

    ``budget`` counts rounds before the karma first dips below
    time_saving / mu_lo, ``mu_lower``/``mu_upper`` before the multiplier first
    exits its box, and ``overall`` is their minimum. All are 1-indexed round
    counts; a violation in round 1 gives 0.
    """

    budget: int
    mu_lower: int
    mu_upper: int

    @property
    def overall(self) -> int:
        return min(self.budget, self.mu_lower, self.mu_upper)


def _prefix_length(violated: np.ndarray) -> int:
    idx = np.nonzero(violated)[0]
    return int(idx[0]) if idx.size else int(violated.shape[0])


def hitting_time(
    karma: np.ndarray,
    multiplier: np.ndarray,
    delta: float,
    mu_lo: float,
    mu_hi: float,
) -> HittingTimes:
    """Compute hitting times from bid-time karma and multiplier series."""
    karma = np.asarray(karma, dtype=float)
    multiplier = np.asarray(multiplier, dtype=float)
    if karma.size == 0 or karma.shape != multiplier.shape:
        raise ValueError("need equal-length, nonempty series")
    return HittingTimes(
        budget=_prefix_length(karma < delta / mu_lo),
        mu_lower=_prefix_length(multiplier < mu_lo),
        mu_upper=_prefix_length(multiplier > mu_hi),
    )
