"""Domain types shared by the whole package.

Holds the mechanism parameters, the valuation / competing-bid distribution
families, step-size schedules, auction-matching models, and the seeded
stream-derivation contract. Everything here is immutable after construction
and validated eagerly, so downstream code never re-checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from typing import Union

import numpy as np

__all__ = [
    "MechanismParams",
    "ContinuousUniform",
    "DiscreteUniform",
    "Geometric",
    "Constant",
    "ValuationModel",
    "IidPair",
    "OrderStatisticPair",
    "Empirical",
    "CompetingBidModel",
    "AgentParams",
    "Fixed",
    "PowerLaw",
    "HorizonPower",
    "StepSchedule",
    "UniformRandom",
    "FixedAssignment",
    "CustomMatching",
    "MatchingModel",
    "Purpose",
    "RngContract",
    "sample_valuation",
    "matching_probabilities",
]


@dataclass(frozen=True)
class MechanismParams:
    """Static parameters of the repeated karma auction.

    ``capacity`` is the number of winners per auction, ``time_saving`` the
    utility gained per won round, ``n_auctions`` the number of parallel
    auctions held each round.
    """

    n_agents: int
    capacity: int
    horizon: int
    time_saving: float = 5.0
    n_auctions: int = 1

    def __post_init__(self):
        if self.n_agents < 2:
            raise ValueError("need at least two agents")
        if not 1 <= self.capacity <= self.n_agents - 1:
            raise ValueError("capacity must lie in [1, n_agents - 1]")
        if self.horizon < 1:
            raise ValueError("horizon must be positive")
        if self.time_saving < 0:
            raise ValueError("time_saving must be nonnegative")
        if self.n_auctions < 1:
            raise ValueError("n_auctions must be positive")

    @property
    def gain_share(self) -> float:
        """Fraction of each auction price redistributed to every agent."""
        return self.capacity / self.n_agents


# ---------------------------------------------------------------------------
# Valuation distributions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ContinuousUniform:
    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self):
        if not self.hi > self.lo:
            raise ValueError("require hi > lo")
        if self.lo < 0:
            raise ValueError("valuations must be nonnegative")

    def sample(self, rng: np.random.Generator, size=None) -> np.ndarray:
        return self.lo + (self.hi - self.lo) * rng.random(size)

    def mean(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def cdf(self, x):
        return np.clip((np.asarray(x, dtype=float) - self.lo) / (self.hi - self.lo), 0.0, 1.0)

    def support(self) -> tuple[float, float]:
        return (self.lo, self.hi)


@dataclass(frozen=True)
class DiscreteUniform:
    """Uniform over the integer support {1, ..., k_max}."""

    k_max: int = 10

    def __post_init__(self):
        if self.k_max < 1:
            raise ValueError("k_max must be >= 1")

    def sample(self, rng: np.random.Generator, size=None) -> np.ndarray:
        return rng.integers(1, self.k_max + 1, size=size).astype(float)

    def mean(self) -> float:
        return 0.5 * (self.k_max + 1)

    def cdf(self, x):
        return np.clip(np.floor(np.asarray(x, dtype=float)) / self.k_max, 0.0, 1.0)

    def support(self) -> tuple[float, float]:
        return (1.0, float(self.k_max))


@dataclass(frozen=True)
class Geometric:
    """Geometric distribution on {1, 2, ...}; kept unnormalized on purpose —
    downstream code must not assume valuations are bounded by one."""

    p: float

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise ValueError("p must lie in (0, 1)")

    def sample(self, rng: np.random.Generator, size=None) -> np.ndarray:
        return rng.geometric(self.p, size=size).astype(float)

    def mean(self) -> float:
        return 1.0 / self.p

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 1.0, 0.0, 1.0 - (1.0 - self.p) ** np.floor(x))

    def support(self) -> tuple[float, float]:
        return (1.0, math.inf)


@dataclass(frozen=True)
class Constant:
    v: float

    def __post_init__(self):
        if self.v < 0:
            raise ValueError("value must be nonnegative")

    def sample(self, rng: np.random.Generator, size=None) -> np.ndarray:
        if size is None:
            return self.v
        return np.full(size, self.v, dtype=float)

    def mean(self) -> float:
        return self.v

    def cdf(self, x):
        return (np.asarray(x, dtype=float) >= self.v).astype(float)

    def support(self) -> tuple[float, float]:
        return (self.v, self.v)


ValuationModel = Union[ContinuousUniform, DiscreteUniform, Geometric, Constant]


def sample_valuation(model: ValuationModel, rng: np.random.Generator) -> float:
    """Draw a single valuation from ``model``."""
    return float(model.sample(rng, size=()))


# ---------------------------------------------------------------------------
# Competing-bid models: joint draws of the top and second-top competing bid
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IidPair:
    """Competing bids with a given marginal for the top bid.

    With ``price_setter_allowed=False`` the second-top bid equals the top bid,
    so the simulated agent can never set the auction price. Otherwise two iid
    draws are sorted into (top, second-top).
    """

    marginal: ValuationModel
    price_setter_allowed: bool = False

    def sample_pairs(self, rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
        if not self.price_setter_allowed:
            d = np.asarray(self.marginal.sample(rng, n), dtype=float)
            return d, d.copy()
        a = np.asarray(self.marginal.sample(rng, n), dtype=float)
        b = np.asarray(self.marginal.sample(rng, n), dtype=float)
        return np.maximum(a, b), np.minimum(a, b)


@dataclass(frozen=True)
class OrderStatisticPair:
    """Adjacent order statistics of ``n_bidders`` iid draws from ``base``.

    Models the competing bids an agent faces inside an auction with
    ``capacity`` winners: the pair is the capacity-th and (capacity+1)-th
    largest of the other bids.
    """

    n_bidders: int
    capacity: int
    base: ValuationModel

    def __post_init__(self):
        if not 1 <= self.capacity <= self.n_bidders - 1:
            raise ValueError("capacity must lie in [1, n_bidders - 1]")

    def sample_pairs(self, rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
        hi = np.empty(n)
        lo = np.empty(n)
        chunk = max(1, int(2**22 // max(self.n_bidders, 1)))
        for start in range(0, n, chunk):
            stop = min(start + chunk, n)
            draws = np.asarray(self.base.sample(rng, (stop - start, self.n_bidders)), dtype=float)
            part = np.partition(draws, (self.n_bidders - self.capacity - 1, self.n_bidders - self.capacity), axis=1)
            hi[start:stop] = part[:, self.n_bidders - self.capacity]
            lo[start:stop] = part[:, self.n_bidders - self.capacity - 1]
        return hi, lo


@dataclass(frozen=True)
class Empirical:
    """A fixed list of (top, second-top) competing-bid pairs."""

    pairs: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if not self.pairs:
            raise ValueError("need at least one pair")
        for hi, lo in self.pairs:
            if lo > hi:
                raise ValueError("second-top competing bid exceeds top bid")
            if lo < 0:
                raise ValueError("competing bids must be nonnegative")

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        arr = np.asarray(self.pairs, dtype=float)
        return arr[:, 0].copy(), arr[:, 1].copy()

    def sample_pairs(self, rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
        hi, lo = self.as_arrays()
        idx = rng.integers(0, len(self.pairs), size=n)
        return hi[idx], lo[idx]


CompetingBidModel = Union[IidPair, OrderStatisticPair, Empirical]


# ---------------------------------------------------------------------------
# Step-size schedules
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Fixed:
    eps: float

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError("step size must be positive")

    def values(self, horizon: int) -> np.ndarray:
        return np.full(horizon, self.eps)


@dataclass(frozen=True)
class PowerLaw:
    """Per-round schedule eps_t = c * t**exponent."""

    c: float
    exponent: float

    def __post_init__(self):
        if self.c <= 0:
            raise ValueError("coefficient must be positive")

    def values(self, horizon: int) -> np.ndarray:
        t = np.arange(1, horizon + 1, dtype=float)
        return self.c * t**self.exponent


@dataclass(frozen=True)
class HorizonPower:
    """Constant step size eps = c * T**exponent, evaluated once per horizon."""

    c: float
    exponent: float

    def __post_init__(self):
        if self.c <= 0:
            raise ValueError("coefficient must be positive")

    def values(self, horizon: int) -> np.ndarray:
        return np.full(horizon, self.c * float(horizon) ** self.exponent)


StepSchedule = Union[Fixed, PowerLaw, HorizonPower]


# ---------------------------------------------------------------------------
# Agent parameters
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AgentParams:
    """Static per-agent configuration.

    ``target_rate`` is only consulted by the rate-pacing strategy; when left
    as None it defaults to initial_karma / horizon at simulation time.
    ``gain_share`` is the redistribution fraction used when the agent bids
    against an exogenous competing-bid process.
    """

    initial_karma: float
    initial_multiplier: float
    mu_lo: float = 0.1
    mu_hi: float = 1000.0
    step_size: StepSchedule = Fixed(0.01)
    target_rate: float | None = None
    gain_share: float = 0.0

    def __post_init__(self):
        if self.initial_karma < 0:
            raise ValueError("initial karma must be nonnegative")
        if not 0 < self.mu_lo < self.mu_hi:
            raise ValueError("require 0 < mu_lo < mu_hi")
        if not self.mu_lo <= self.initial_multiplier <= self.mu_hi:
            raise ValueError("initial multiplier must start inside [mu_lo, mu_hi]")
        if self.target_rate is not None and self.target_rate < 0:
            raise ValueError("target rate must be nonnegative")
        if not 0.0 <= self.gain_share <= 1.0:
            raise ValueError("gain share must lie in [0, 1]")

    def rate_for(self, horizon: int) -> float:
        if self.target_rate is not None:
            return self.target_rate
        return self.initial_karma / horizon


# ---------------------------------------------------------------------------
# Matching models for parallel auctions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UniformRandom:
    def probabilities(self, n_agents: int, n_auctions: int) -> np.ndarray:
        return np.full((n_agents, n_auctions), 1.0 / n_auctions)

    def sample_assignments(self, rng: np.random.Generator, n_auctions: int, horizon: int) -> np.ndarray:
        return rng.integers(0, n_auctions, size=horizon, dtype=np.int32)


@dataclass(frozen=True)
class FixedAssignment:
    assignment: tuple[int, ...]

    def probabilities(self, n_agents: int, n_auctions: int) -> np.ndarray:
        if len(self.assignment) != n_agents:
            raise ValueError("assignment length must equal n_agents")
        p = np.zeros((n_agents, n_auctions))
        for i, m in enumerate(self.assignment):
            if not 0 <= m < n_auctions:
                raise ValueError("auction index out of range")
            p[i, m] = 1.0
        return p


@dataclass(frozen=True)
class CustomMatching:
    matrix: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        p = np.asarray(self.matrix, dtype=float)
        if p.ndim != 2:
            raise ValueError("matching matrix must be two-dimensional")
        if np.any(p < 0):
            raise ValueError("matching probabilities must be nonnegative")
        if not np.allclose(p.sum(axis=1), 1.0, rtol=0, atol=1e-12):
            raise ValueError("each matching row must sum to one")

    def probabilities(self, n_agents: int, n_auctions: int) -> np.ndarray:
        p = np.asarray(self.matrix, dtype=float)
        if p.shape != (n_agents, n_auctions):
            raise ValueError(f"matching matrix shape {p.shape} does not match ({n_agents}, {n_auctions})")
        return p


MatchingModel = Union[UniformRandom, FixedAssignment, CustomMatching]


def matching_probabilities(model: MatchingModel, n_agents: int, n_auctions: int) -> np.ndarray:
    """Pairwise probabilities that two agents land in the same auction.

    Entry (i, j) is the inner product of the agents' assignment rows; the
    diagonal carries no meaning and is zeroed.
    """
    p = model.probabilities(n_agents, n_auctions)
    a = p @ p.T
    np.fill_diagonal(a, 0.0)
    return a


def sample_assignment_matrix(
    model: MatchingModel,
    streams: "RngContract",
    replication: int,
    n_agents: int,
    n_auctions: int,
    horizon: int,
) -> np.ndarray:
    """Draw the (n_agents, horizon) auction assignment, one stream per agent."""
    out = np.empty((n_agents, horizon), dtype=np.int32)
    if isinstance(model, FixedAssignment):
        for i, m in enumerate(model.assignment):
            out[i, :] = m
        return out
    p = model.probabilities(n_agents, n_auctions)
    for i in range(n_agents):
        rng = streams.stream(replication, i, Purpose.MATCHING)
        if isinstance(model, UniformRandom):
            out[i] = model.sample_assignments(rng, n_auctions, horizon)
        else:
            out[i] = rng.choice(n_auctions, size=horizon, p=p[i]).astype(np.int32)
    return out


# ---------------------------------------------------------------------------
# Seeded stream derivation
# ---------------------------------------------------------------------------


class Purpose(IntEnum):
    VALUATION = 0
    COMPETING = 1
    TIEBREAK = 2
    MATCHING = 3
    GENERAL = 4


@dataclass(frozen=True)
class RngContract:
    """Derives independent, reproducible random streams.

    Each (replication, agent, purpose) triple keys a counter-based Philox
    stream, so identical configuration and base seed reproduce traces exactly
    regardless of thread count or evaluation order.
    """

    base_seed: int

    def __post_init__(self):
        if not 0 <= self.base_seed < 2**64:
            raise ValueError("base seed must be a 64-bit unsigned integer")

    def stream(self, replication: int = 0, agent: int = 0, purpose: Purpose = Purpose.GENERAL) -> np.random.Generator:
        seq = np.random.SeedSequence(entropy=self.base_seed, spawn_key=(replication, agent, int(purpose)))
        return np.random.Generator(np.random.Philox(seq))
