"""Simulation engines: stationary competition, simultaneous learning,
parallel auctions, and the paired-seed unilateral-deviation harness.

Every engine pregenerates its random inputs from per-(replication, agent,
purpose) streams and hands them to a backend kernel, so a configuration and
base seed pin the whole trace. Deviation experiments reuse the identical
pregenerated arrays for the baseline and the deviating run (common random
numbers), which makes a self-deviation yield exactly zero gain.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _backend
from .core import (
    AgentParams,
    CompetingBidModel,
    MatchingModel,
    MechanismParams,
    Purpose,
    RngContract,
    UniformRandom,
    ValuationModel,
    sample_assignment_matrix,
)
from .hindsight import HindsightInstance, solve_fractional
from .strategies import (
    AdaptivePacing,
    AdaptivePacingWithGain,
    HindsightReplay,
    HittingTimes,
    KarmaPacing,
    ScaledDeviation,
    StrategyKind,
    TruthfulCapped,
)

__all__ = [
    "Trace",
    "run_stationary",
    "run_simultaneous",
    "run_parallel",
    "run_deviation",
    "run_deviation_family",
    "DeviationResult",
    "replay_plan_from_base",
]

_TRACE_COLUMNS = ("valuation", "bid", "won", "payment", "gain", "karma", "multiplier", "cost", "saved")


@dataclass
class Trace:
    """Result of one simulated episode.

    Per-round arrays have shape (n_agents, horizon) and hold bid-time state
    (karma and multiplier before the round settles); they are None when the
    episode was run in summary-only mode. Costs count every round's
    valuation, discounted by the time saving on won rounds.
    """

    horizon: int
    time_saving: float
    cost: np.ndarray
    saved: np.ndarray
    final_karma: np.ndarray
    final_multiplier: np.ndarray
    hitting: list[HittingTimes]
    max_multiplier_sum_dev: float = 0.0
    max_karma_sum_dev: float = 0.0
    sum_sq_distance: float | None = None
    valuations: np.ndarray | None = None
    bids: np.ndarray | None = None
    winners: np.ndarray | None = None
    payments: np.ndarray | None = None
    gains: np.ndarray | None = None
    karma: np.ndarray | None = None
    multiplier: np.ndarray | None = None
    competing_hi: np.ndarray | None = None
    competing_lo: np.ndarray | None = None

    @property
    def n_agents(self) -> int:
        return self.cost.shape[0]

    @property
    def has_rounds(self) -> bool:
        return self.bids is not None

    def mean_sq_distance(self) -> float:
        if self.sum_sq_distance is None:
            raise ValueError("episode was run without a stationary profile to compare against")
        return self.sum_sq_distance / self.horizon

    def cumulative_saved(self, agent: int = 0) -> np.ndarray:
        if not self.has_rounds:
            raise ValueError("per-round arrays were not recorded")
        per_round = self.winners[agent].astype(float) * self.time_saving * self.valuations[agent]
        return np.cumsum(per_round)

    def round_costs(self, agent: int = 0) -> np.ndarray:
        if not self.has_rounds:
            raise ValueError("per-round arrays were not recorded")
        x = self.winners[agent].astype(float)
        return self.valuations[agent] * (1.0 - x * self.time_saving)

    def to_csv(self, path) -> None:
        """Write the per-round records as a flat CSV (one row per agent-round)."""
        if not self.has_rounds:
            raise ValueError("per-round arrays were not recorded")
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(("agent", "t") + _TRACE_COLUMNS)
            for i in range(self.n_agents):
                costs = self.round_costs(i)
                savings = self.winners[i].astype(float) * self.time_saving * self.valuations[i]
                for t in range(self.horizon):
                    writer.writerow(
                        (
                            i,
                            t + 1,
                            repr(float(self.valuations[i, t])),
                            repr(float(self.bids[i, t])),
                            int(self.winners[i, t]),
                            repr(float(self.payments[i, t])),
                            repr(float(self.gains[i, t])),
                            repr(float(self.karma[i, t])),
                            repr(float(self.multiplier[i, t])),
                            repr(float(costs[t])),
                            repr(float(savings[t])),
                        )
                    )


def _encode_strategy(
    strategy: StrategyKind, params: AgentParams, horizon: int
) -> tuple[int, float, float, float, np.ndarray | None]:
    """Reduce a strategy tag to (code, rho, factor, fixed_mu, replay_bids)."""
    kern = _backend.kernels
    factor = 1.0
    while isinstance(strategy, ScaledDeviation):
        factor *= strategy.factor
        strategy = strategy.base
    rho = params.rate_for(horizon)
    if isinstance(strategy, KarmaPacing):
        return kern.STRAT_K, rho, factor, 1.0, None
    if isinstance(strategy, AdaptivePacing):
        return kern.STRAT_A, rho, factor, 1.0, None
    if isinstance(strategy, AdaptivePacingWithGain):
        return kern.STRAT_A_GAIN, rho, factor, 1.0, None
    if isinstance(strategy, TruthfulCapped):
        return kern.STRAT_TRUTHFUL, rho, factor, strategy.multiplier, None
    if isinstance(strategy, HindsightReplay):
        bids = np.asarray(strategy.bids, dtype=float)
        if bids.shape != (horizon,):
            raise ValueError("replay plan length must equal the horizon")
        return kern.STRAT_REPLAY, rho, factor, 1.0, bids
    raise TypeError(f"unsupported strategy {strategy!r}")


def run_stationary(
    params: AgentParams,
    strategy: StrategyKind,
    val_model: ValuationModel,
    comp_model: CompetingBidModel,
    horizon: int,
    time_saving: float,
    streams: RngContract,
    replication: int = 0,
    record_trace: bool = True,
) -> Trace:
    """Single agent against iid competing-bid pairs.

    The agent wins when its bid strictly exceeds the top competing bid and
    then pays it; the redistribution gain is ``params.gain_share`` times the
    realized auction price (top competing bid when winning, own bid when the
    agent sets the price, second-top otherwise).
    """
    kern = _backend.kernels
    v = np.ascontiguousarray(val_model.sample(streams.stream(replication, 0, Purpose.VALUATION), horizon), dtype=float)
    d_hi, d_lo = comp_model.sample_pairs(streams.stream(replication, 0, Purpose.COMPETING), horizon)
    d_hi = np.ascontiguousarray(d_hi, dtype=float)
    d_lo = np.ascontiguousarray(d_lo, dtype=float)
    if np.any(d_lo > d_hi):
        raise ValueError("competing-bid model produced a second-top bid above the top bid")
    eps = np.ascontiguousarray(params.step_size.values(horizon), dtype=float)

    code, rho, factor, fixed_mu, replay = _encode_strategy(strategy, params, horizon)
    out = {name: np.empty(horizon) if record_trace else None for name in ("b", "x", "z", "g", "k", "mu")}
    cost, saved, final_mu, final_k, hit_b, hit_lo, hit_hi = kern.run_single_agent(
        v,
        d_hi,
        d_lo,
        eps,
        time_saving,
        params.gain_share,
        params.mu_lo,
        params.mu_hi,
        params.initial_multiplier,
        params.initial_karma,
        code,
        rho,
        factor,
        fixed_mu,
        replay,
        out["b"],
        out["x"],
        out["z"],
        out["g"],
        out["k"],
        out["mu"],
    )
    hitting = [HittingTimes(int(hit_b), int(hit_lo), int(hit_hi))]
    trace = Trace(
        horizon=horizon,
        time_saving=time_saving,
        cost=np.array([cost]),
        saved=np.array([saved]),
        final_karma=np.array([final_k]),
        final_multiplier=np.array([final_mu]),
        hitting=hitting,
        valuations=v[None, :],
        competing_hi=d_hi[None, :],
        competing_lo=d_lo[None, :],
    )
    if record_trace:
        trace.bids = out["b"][None, :]
        trace.winners = out["x"][None, :] != 0.0
        trace.payments = out["z"][None, :]
        trace.gains = out["g"][None, :]
        trace.karma = out["k"][None, :]
        trace.multiplier = out["mu"][None, :]
    return trace


def _shared_attr(agents: Sequence[tuple[AgentParams, StrategyKind]], name: str):
    values = {getattr(p, name) for p, _ in agents}
    if len(values) != 1:
        raise ValueError(f"population engines require a shared {name!r} across agents")
    return values.pop()


def _run_population(
    agents: Sequence[tuple[AgentParams, StrategyKind]],
    val_models: ValuationModel | Sequence[ValuationModel],
    mech: MechanismParams,
    streams: RngContract,
    replication: int,
    matching: MatchingModel | None,
    redistribute: bool,
    record_trace: bool,
    record_competing: bool,
    mu_star: np.ndarray | None,
) -> Trace:
    kern = _backend.kernels
    n = mech.n_agents
    horizon = mech.horizon
    if len(agents) != n:
        raise ValueError("agent list length must equal n_agents")
    if isinstance(val_models, (list, tuple)):
        if len(val_models) != n:
            raise ValueError("need one valuation model per agent")
        models = list(val_models)
    else:
        models = [val_models] * n

    schedule = _shared_attr(agents, "step_size")
    mu_lo = _shared_attr(agents, "mu_lo")
    mu_hi = _shared_attr(agents, "mu_hi")
    eps = np.ascontiguousarray(schedule.values(horizon), dtype=float)

    v = np.empty((n, horizon))
    priority = np.empty((n, horizon))
    for i in range(n):
        v[i] = models[i].sample(streams.stream(replication, i, Purpose.VALUATION), horizon)
        priority[i] = streams.stream(replication, i, Purpose.TIEBREAK).random(horizon)

    if mech.n_auctions == 1:
        assign = np.zeros((n, horizon), dtype=np.int32)
    else:
        if matching is None:
            matching = UniformRandom()
        assign = sample_assignment_matrix(matching, streams, replication, n, mech.n_auctions, horizon)

    mu0 = np.array([p.initial_multiplier for p, _ in agents])
    k0 = np.array([p.initial_karma for p, _ in agents])
    codes = np.empty(n, dtype=np.int32)
    rho = np.empty(n)
    factor = np.empty(n)
    fixed_mu = np.empty(n)
    replay_bids = None
    for i, (p, s) in enumerate(agents):
        codes[i], rho[i], factor[i], fixed_mu[i], replay = _encode_strategy(s, p, horizon)
        if replay is not None:
            if replay_bids is not None:
                raise ValueError("at most one agent may replay a bid plan")
            replay_bids = np.ascontiguousarray(replay)

    cost = np.empty(n)
    saved = np.empty(n)
    final_mu = np.empty(n)
    final_k = np.empty(n)
    hit_b = np.empty(n, dtype=np.int64)
    hit_lo = np.empty(n, dtype=np.int64)
    hit_hi = np.empty(n, dtype=np.int64)
    accum = np.zeros(3)
    shape = (n, horizon)
    trace_arrays = {name: np.empty(shape) if record_trace else None for name in ("b", "x", "z", "g", "k", "mu")}
    d_arrays = {name: np.empty(shape) if record_competing else None for name in ("dhi", "dlo")}
    mu_star_arr = None if mu_star is None else np.ascontiguousarray(mu_star, dtype=float)

    kern.run_population(
        v,
        priority,
        assign,
        eps,
        mech.n_auctions,
        mech.capacity,
        mech.time_saving,
        mech.gain_share,
        redistribute,
        mu_lo,
        mu_hi,
        mu0,
        k0,
        codes,
        rho,
        factor,
        fixed_mu,
        replay_bids,
        mu_star_arr,
        cost,
        saved,
        final_mu,
        final_k,
        hit_b,
        hit_lo,
        hit_hi,
        accum,
        trace_arrays["b"],
        trace_arrays["x"],
        trace_arrays["z"],
        trace_arrays["g"],
        trace_arrays["k"],
        trace_arrays["mu"],
        d_arrays["dhi"],
        d_arrays["dlo"],
    )

    hitting = [HittingTimes(int(hit_b[i]), int(hit_lo[i]), int(hit_hi[i])) for i in range(n)]
    trace = Trace(
        horizon=horizon,
        time_saving=mech.time_saving,
        cost=cost,
        saved=saved,
        final_karma=final_k,
        final_multiplier=final_mu,
        hitting=hitting,
        max_multiplier_sum_dev=float(accum[1]),
        max_karma_sum_dev=float(accum[2]),
        sum_sq_distance=float(accum[0]) if mu_star is not None else None,
        valuations=v,
    )
    if record_trace:
        trace.bids = trace_arrays["b"]
        trace.winners = trace_arrays["x"] != 0.0
        trace.payments = trace_arrays["z"]
        trace.gains = trace_arrays["g"]
        trace.karma = trace_arrays["k"]
        trace.multiplier = trace_arrays["mu"]
    if record_competing:
        trace.competing_hi = d_arrays["dhi"]
        trace.competing_lo = d_arrays["dlo"]
    return trace


def run_simultaneous(
    agents: Sequence[tuple[AgentParams, StrategyKind]],
    val_models,
    mech: MechanismParams,
    streams: RngContract,
    replication: int = 0,
    redistribute: bool = True,
    record_trace: bool = False,
    record_competing: bool = False,
    mu_star: np.ndarray | None = None,
) -> Trace:
    """All agents in one shared auction per round."""
    if mech.n_auctions != 1:
        raise ValueError("run_simultaneous requires a single auction; use run_parallel")
    return _run_population(
        agents, val_models, mech, streams, replication, None, redistribute, record_trace, record_competing, mu_star
    )


def run_parallel(
    agents: Sequence[tuple[AgentParams, StrategyKind]],
    val_models,
    mech: MechanismParams,
    matching: MatchingModel,
    streams: RngContract,
    replication: int = 0,
    redistribute: bool = True,
    record_trace: bool = False,
    record_competing: bool = False,
    mu_star: np.ndarray | None = None,
) -> Trace:
    """Agents matched into parallel auctions; aggregate payments are
    redistributed globally."""
    return _run_population(
        agents, val_models, mech, streams, replication, matching, redistribute, record_trace, record_competing, mu_star
    )


def replay_plan_from_base(
    base: Trace,
    agent: int,
    params: AgentParams,
    mech: MechanismParams,
    margin: float = 1e-9,
) -> HindsightReplay:
    """Turn the hindsight-optimal plan for ``agent``'s base-run sample path
    into a bid schedule (complete-information deviation policy).

    Rounds the fractional item to a win when at least half taken; winning
    bids sit just above the base run's top competing bid.
    """
    if base.competing_hi is None:
        raise ValueError("base trace must be run with record_competing=True")
    d = base.competing_hi[agent]
    inst = HindsightInstance(
        valuations=base.valuations[agent],
        competing=d,
        time_saving=mech.time_saving,
        budget=params.rate_for(base.horizon) * base.horizon,
        gain_share=mech.gain_share,
    )
    plan = solve_fractional(inst).fractional_plan
    bids = np.where(plan >= 0.5, d * (1.0 + margin) + margin, 0.0)
    return HindsightReplay(tuple(bids))


@dataclass
class DeviationResult:
    """Per-period cost improvement from unilaterally deviating."""

    strategy_label: str
    gains: np.ndarray

    @property
    def mean(self) -> float:
        return float(self.gains.mean())

    def stderr(self) -> float:
        n = self.gains.shape[0]
        return float(self.gains.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0


def run_deviation_family(
    agents: Sequence[tuple[AgentParams, StrategyKind]],
    deviator: int,
    deviations: dict[str, StrategyKind | str],
    mech: MechanismParams,
    val_models,
    streams: RngContract,
    replication: int,
    matching: MatchingModel | None = None,
    redistribute: bool = True,
) -> dict[str, float]:
    """Per-period gains for several deviation policies sharing one baseline.

    The baseline episode is simulated once per replication and reused for
    every policy; all runs share identical pregenerated draws.
    """
    need_competing = any(isinstance(d, str) for d in deviations.values())
    base = _run_population(
        agents, val_models, mech, streams, replication, matching, redistribute, False, need_competing, None
    )
    gains: dict[str, float] = {}
    for label, deviation in deviations.items():
        if isinstance(deviation, str):
            if deviation != "hindsight":
                raise ValueError("the only named deviation is 'hindsight'")
            strategy: StrategyKind = replay_plan_from_base(base, deviator, agents[deviator][0], mech)
        else:
            strategy = deviation
        dev_agents = list(agents)
        dev_agents[deviator] = (agents[deviator][0], strategy)
        dev = _run_population(
            dev_agents, val_models, mech, streams, replication, matching, redistribute, False, False, None
        )
        gains[label] = (float(base.cost[deviator]) - float(dev.cost[deviator])) / mech.horizon
    return gains


def run_deviation(
    agents: Sequence[tuple[AgentParams, StrategyKind]],
    deviator: int,
    deviation: StrategyKind | str,
    mech: MechanismParams,
    val_models,
    streams: RngContract,
    replications: Sequence[int],
    matching: MatchingModel | None = None,
    redistribute: bool = True,
) -> DeviationResult:
    """Estimate the per-period gain of one agent deviating, under paired seeds.

    ``deviation`` may be the string "hindsight" to request the
    complete-information replay policy derived from each baseline run.
    Positive gains mean the deviation lowered the deviator's cost.
    """
    label = deviation if isinstance(deviation, str) else repr(deviation)
    gains = np.empty(len(replications))
    for j, rep in enumerate(replications):
        gains[j] = run_deviation_family(
            agents, deviator, {label: deviation}, mech, val_models, streams, rep, matching, redistribute
        )[label]
    return DeviationResult(label, gains)
