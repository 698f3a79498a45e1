"""Hindsight-optimal benchmark solvers.

The benchmark relaxes the sequential budget to a single horizon-wide
constraint and grants losers the maximum possible redistribution gain. The
resulting problem is a fractional knapsack: maximize the total time saving
of won rounds subject to spending at most

    budget + gain_share * sum(competing)

on winning, where winning round t costs its top competing bid. The solvers
here are the greedy primal, the piecewise-linear dual (whose value equals
the primal by LP duality), and a brute-force 0/1 oracle for tiny horizons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "HindsightInstance",
    "HindsightSolution",
    "solve_fractional",
    "solve_dual",
    "solve_exact_01",
    "hindsight_no_gain",
]

_EXACT_MAX_T = 22


@dataclass(frozen=True)
class HindsightInstance:
    """A realized sample path plus the budget parameters of the benchmark.

    ``budget`` is the initial endowment (target rate times horizon);
    ``gain_share`` of every round's top competing bid is additionally
    credited, matching the relaxation where a losing agent always sets the
    price.
    """

    valuations: np.ndarray
    competing: np.ndarray
    time_saving: float
    budget: float
    gain_share: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.valuations, dtype=float)
        d = np.asarray(self.competing, dtype=float)
        if v.ndim != 1 or v.shape != d.shape or v.size == 0:
            raise ValueError("valuations and competing bids must be equal-length vectors")
        if np.any(v < 0) or np.any(d < 0):
            raise ValueError("entries must be nonnegative")
        if self.budget < 0 or self.time_saving < 0:
            raise ValueError("budget and time_saving must be nonnegative")
        if not 0.0 <= self.gain_share <= 1.0:
            raise ValueError("gain_share must lie in [0, 1]")
        object.__setattr__(self, "valuations", v)
        object.__setattr__(self, "competing", d)

    @property
    def horizon(self) -> int:
        return self.valuations.shape[0]

    @property
    def win_budget(self) -> float:
        return self.budget + self.gain_share * float(self.competing.sum())


@dataclass
class HindsightSolution:
    fractional_plan: np.ndarray
    cost: float
    dual_multiplier: float
    dual_value: float
    degenerate: bool = False


def _dual_values(inst: HindsightInstance, mus: np.ndarray) -> np.ndarray:
    """Evaluate the concave dual objective at each multiplier in ``mus``."""
    v = inst.valuations
    d = inst.competing
    total_v = v.sum()
    slack = np.maximum(inst.time_saving * v[None, :] - mus[:, None] * d[None, :], 0.0)
    return total_v - mus * inst.win_budget - slack.sum(axis=1)


def solve_fractional(inst: HindsightInstance) -> HindsightSolution:
    """Greedy fractional-knapsack primal with its supporting dual multiplier.

    Free rounds (zero competing bid) are won outright; the rest are taken in
    decreasing order of time_saving*v/d until the win budget is exhausted,
    with ratio ties broken toward the earlier round. At most one round ends
    up fractional. The supporting multiplier is the critical round's ratio,
    or zero when the budget constraint is slack.
    """
    v = inst.valuations
    d = inst.competing
    delta = inst.time_saving
    t_len = inst.horizon
    budget = inst.win_budget

    x = np.zeros(t_len)
    free = d == 0.0
    x[free] = 1.0

    idx = np.nonzero(~free)[0]
    mu_star = 0.0
    if idx.size:
        ratio = delta * v[idx] / d[idx]
        order = idx[np.argsort(-ratio, kind="stable")]
        weights = d[order]
        cum = np.cumsum(weights)
        fits = cum <= budget + 1e-15 * max(1.0, budget)
        n_full = int(np.count_nonzero(fits))
        x[order[:n_full]] = 1.0
        if n_full < order.size:
            crit = order[n_full]
            remaining = budget - (cum[n_full - 1] if n_full else 0.0)
            x[crit] = max(remaining, 0.0) / d[crit]
            mu_star = delta * v[crit] / d[crit]

    cost = float(v.sum() - delta * (x * v).sum())
    dual_value = float(_dual_values(inst, np.array([mu_star]))[0])
    degenerate = budget <= 0.0 and bool(np.any(v[~free] > 0))
    return HindsightSolution(x, cost, mu_star, dual_value, degenerate)


def solve_dual(inst: HindsightInstance) -> tuple[float, float]:
    """Maximize the piecewise-linear dual over all of its breakpoints.

    Returns (multiplier, value). A degenerate instance with zero win budget
    and at least one costly-but-valuable round has its supremum at infinity;
    the sentinel math.inf is returned with the limiting value.
    """
    v = inst.valuations
    d = inst.competing
    if inst.win_budget <= 0.0:
        positive = d > 0
        if np.any(v[positive] > 0):
            limit = float(v.sum() - inst.time_saving * v[~positive].sum())
            return math.inf, limit
    ratios = inst.time_saving * v[d > 0] / d[d > 0]
    candidates = np.unique(np.concatenate([[0.0], ratios]))
    values = _dual_values(inst, candidates)
    best = int(np.argmax(values))
    return float(candidates[best]), float(values[best])


def solve_exact_01(inst: HindsightInstance) -> float:
    """Exact 0/1 optimum by enumeration; horizons above 22 are refused."""
    t_len = inst.horizon
    if t_len > _EXACT_MAX_T:
        raise ValueError(f"horizon {t_len} too large for enumeration (max {_EXACT_MAX_T})")
    v = inst.valuations
    d = inst.competing
    budget = inst.win_budget
    total_v = float(v.sum())
    best_saving = 0.0
    n_masks = 1 << t_len
    chunk = 1 << 16
    masks = np.arange(n_masks, dtype=np.uint64)
    bits = (1 << np.arange(t_len, dtype=np.uint64))[None, :]
    for start in range(0, n_masks, chunk):
        block = masks[start : start + chunk, None]
        sel = (block & bits) != 0
        weight = sel @ d
        saving = inst.time_saving * (sel @ v)
        feasible = weight <= budget + 1e-12 * max(1.0, budget)
        if np.any(feasible):
            best_saving = max(best_saving, float(saving[feasible].max()))
    return total_v - best_saving


def hindsight_no_gain(
    valuations: np.ndarray,
    competing: np.ndarray,
    time_saving: float,
    budget: float,
) -> HindsightSolution:
    """Benchmark for the no-redistribution setting (gain share zero)."""
    inst = HindsightInstance(valuations, competing, time_saving, budget, gain_share=0.0)
    return solve_fractional(inst)
