"""Declarative experiment specs and the sweep runner.

A spec is one YAML file describing an experiment kind, its horizon grid,
replication count, seed, and model parameters. Budget and step-size scaling
rules are (coefficient, exponent) pairs applied per horizon. Running a spec
produces results.csv (one row per grid point and statistic), slopes.csv
(log-log fits over the horizon grid), and manifest.json echoing the spec.

Grid points x replications are dispatched to a process pool; aggregation is
keyed and sorted, so the output is identical regardless of scheduling.
"""

from __future__ import annotations

import hashlib
import importlib.resources
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from ._backend import BACKEND
from .core import (
    AgentParams,
    ContinuousUniform,
    Constant,
    DiscreteUniform,
    Empirical,
    Fixed,
    Geometric,
    HorizonPower,
    IidPair,
    MechanismParams,
    OrderStatisticPair,
    PowerLaw,
    RngContract,
    UniformRandom,
)
from .metrics import (
    AssumptionCheck,
    AssumptionInputs,
    check_assumptions,
    fit_loglog_slope,
    instance_for_trace,
    mean_ci,
    regret_vs_hindsight,
)
from .sim import run_deviation_family, run_simultaneous, run_stationary
from .strategies import AdaptivePacing, AdaptivePacingWithGain, KarmaPacing, ScaledDeviation, TruthfulCapped

__all__ = [
    "EXPERIMENT_KINDS",
    "load_spec",
    "bundled_spec_names",
    "bundled_spec_text",
    "validate_spec",
    "run_experiment",
    "SweepResult",
    "RESULTS_COLUMNS",
    "SLOPES_COLUMNS",
]

EXPERIMENT_KINDS = (
    "stationary-regret",
    "simultaneous-convergence",
    "parallel-nash-gap",
    "hitting-time",
    "fixed-budget-variable-eps",
    "discrete-valuations",
    "episode-comparison",
)

RESULTS_COLUMNS = ("grid_id", "T", "param_hash", "stat_name", "mean", "ci_lo", "ci_hi", "n_reps")
SLOPES_COLUMNS = ("stat_name", "slope", "stderr", "n_points")

_STRATEGIES = {
    "karma-pacing": KarmaPacing,
    "rate-pacing": AdaptivePacing,
    "rate-pacing-gain": AdaptivePacingWithGain,
}

# replication-index offset for auxiliary runs (keeps their streams disjoint
# from the sweep's)
_AUX_REP_OFFSET = 1_000_000


class SpecError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Spec loading and model parsing
# ---------------------------------------------------------------------------


def bundled_spec_names() -> list[str]:
    root = importlib.resources.files("karmapace") / "specs"
    return sorted(p.name.removesuffix(".yaml") for p in root.iterdir() if p.name.endswith(".yaml"))


def bundled_spec_text(name: str) -> str:
    res = importlib.resources.files("karmapace") / "specs" / f"{name}.yaml"
    if not res.is_file():
        raise SpecError(f"no bundled experiment named {name!r}; see list-experiments")
    return res.read_text()


def load_spec(source) -> dict:
    """Load a spec from a path or bundled name and check its basic shape."""
    path = Path(source)
    if path.is_file():
        label = str(path)
        text = path.read_text()
    elif str(source).endswith(".yaml"):
        raise SpecError(f"no such spec file: {source}")
    else:
        label = str(source)
        text = bundled_spec_text(label)
    try:
        spec = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise SpecError(f"cannot parse {label}: {exc}") from exc
    if not isinstance(spec, dict):
        raise SpecError(f"{label} does not hold a mapping")
    errors = validate_spec(spec)[0]
    if errors:
        raise SpecError(f"{label}: " + "; ".join(errors))
    return spec


def _parse_valuation(d: dict):
    family = d.get("family")
    if family == "uniform":
        return ContinuousUniform(float(d.get("lo", 0.0)), float(d.get("hi", 1.0)))
    if family == "discrete-uniform":
        return DiscreteUniform(int(d.get("k_max", 10)))
    if family == "geometric":
        return Geometric(float(d["p"]))
    if family == "constant":
        return Constant(float(d["value"]))
    raise SpecError(f"unknown valuation family {family!r}")


def _parse_competing(d: dict):
    if "pairs" in d:
        return Empirical(tuple((float(a), float(b)) for a, b in d["pairs"]))
    if "n_bidders" in d:
        return OrderStatisticPair(int(d["n_bidders"]), int(d["capacity"]), _parse_valuation(d["base"]))
    return IidPair(_parse_valuation(d["marginal"]), bool(d.get("price_setter_allowed", False)))


def _parse_schedule(d: dict, horizon: int):
    if "fixed" in d:
        return Fixed(float(d["fixed"]))
    coeff = float(d["coeff"])
    exponent = float(d["exponent"])
    if d.get("mode", "horizon-power") == "per-round":
        return PowerLaw(coeff, exponent)
    return HorizonPower(coeff, exponent)


def _scaled_value(d: dict, horizon: int) -> float:
    if "fixed" in d:
        return float(d["fixed"])
    return float(d["coeff"]) * float(horizon) ** float(d["exponent"])


def _agent_params(agent: dict, horizon: int, initial_multiplier: float | None = None) -> AgentParams:
    return AgentParams(
        initial_karma=_scaled_value(agent["budget"], horizon),
        initial_multiplier=float(initial_multiplier if initial_multiplier is not None else agent["initial_multiplier"]),
        mu_lo=float(agent.get("mu_lo", 0.1)),
        mu_hi=float(agent.get("mu_hi", 1000.0)),
        step_size=_parse_schedule(agent["step"], horizon),
        target_rate=agent.get("target_rate"),
        gain_share=float(agent.get("gain_share", 0.0)),
    )


def _population_multipliers(pop: dict, n: int) -> list[float]:
    init = pop["initial_multipliers"]
    if "split" in init:
        lo, hi = (float(x) for x in init["split"])
        half = n // 2
        return [lo] * half + [hi] * (n - half)
    if "constant" in init:
        return [float(init["constant"])] * n
    raise SpecError("initial_multipliers needs 'split' or 'constant'")


def _merge_variant(spec: dict, variant: dict | None) -> dict:
    if not variant:
        return spec
    merged = dict(spec)
    for key, value in variant.items():
        if key == "label":
            continue
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            inner = dict(merged[key])
            inner.update(value)
            merged[key] = inner
        else:
            merged[key] = value
    return merged


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def validate_spec(spec: dict, thorough: bool = False) -> tuple[list[str], list[AssumptionCheck]]:
    """Hard structural errors plus the parameter-design report.

    Errors make the spec unrunnable; design-check failures are advisory.
    With ``thorough`` the distribution-dependent inputs of the design checks
    (stationary multiplier, dual-derivative bound) are estimated by Monte
    Carlo for single-agent kinds instead of being reported not-checkable.
    """
    errors: list[str] = []
    kind = spec.get("kind")
    if kind not in EXPERIMENT_KINDS:
        errors.append(f"unknown experiment kind {kind!r}")
        return errors, []
    if not isinstance(spec.get("name"), str):
        errors.append("spec needs a name")
    if not isinstance(spec.get("base_seed"), int):
        errors.append("base_seed must be an integer")
    reps = spec.get("replications", 1)
    if not (isinstance(reps, int) and reps >= 1):
        errors.append("replications must be a positive integer")
    horizons = spec.get("horizons", [])
    if kind != "episode-comparison" and (
        not horizons or any(not isinstance(t, int) or t < 1 for t in horizons)
    ):
        errors.append("horizons must be a nonempty list of positive integers")

    report: list[AssumptionCheck] = []
    try:
        probe_t = int(horizons[-1]) if horizons else int(spec.get("horizon", 1))
        mech_cfg = spec.get("mechanism", {})
        delta = float(mech_cfg.get("time_saving", 5.0))
        if kind == "parallel-nash-gap":
            per = int(mech_cfg["agents_per_auction"])
            sizes = [int(x) for x in spec["population_sizes"]]
            if any(n % per for n in sizes):
                errors.append("population sizes must be multiples of agents_per_auction")
            for n in sizes:
                MechanismParams(n, int(mech_cfg["capacity"]), probe_t, delta, max(1, n // per))
            pop = spec["population"]
            mults = _population_multipliers(pop, sizes[0])
            _agent_params({**pop, "initial_multiplier": mults[0]}, probe_t)
            _parse_valuation(spec["valuation"])
        elif kind in ("simultaneous-convergence", "hitting-time", "fixed-budget-variable-eps") or (
            kind == "discrete-valuations" and spec.get("mode") == "simultaneous"
        ):
            n = int(mech_cfg["n_agents"])
            MechanismParams(n, int(mech_cfg["capacity"]), probe_t, delta, int(mech_cfg.get("n_auctions", 1)))
            pop = spec["population"]
            mults = _population_multipliers(pop, n)
            params = _agent_params({**pop, "initial_multiplier": mults[0]}, probe_t)
            val = _parse_valuation(spec["valuation"])
            report = check_assumptions(
                AssumptionInputs(
                    delta=delta,
                    mu_lo=params.mu_lo,
                    mu_hi=params.mu_hi,
                    eps_max=float(params.step_size.values(probe_t).max()),
                    n_agents=n,
                    capacity=int(mech_cfg["capacity"]),
                    initial_karma=params.initial_karma,
                    initial_multiplier=mults[0],
                    val_support=val.support(),
                    mean_initial_multiplier=float(np.mean(mults)),
                )
            )
        elif kind in ("stationary-regret", "episode-comparison") or kind == "discrete-valuations":
            agent_cfg = spec["agent"] if "agent" in spec else next(iter(spec["agents"].values()))
            params = _agent_params(agent_cfg, probe_t)
            val = _parse_valuation(spec["valuation"])
            comp = _parse_competing(spec["competing"])
            comp_support = comp_mean = None
            if isinstance(comp, IidPair):
                comp_support = comp.marginal.support()
                comp_mean = comp.marginal.mean()
            mu_star_est = deriv_bound = None
            if thorough:
                from .metrics import estimate_derivative_bound, find_stationary_multiplier

                gain_share = float(agent_cfg.get("gain_share", 0.0))
                probe_stream = RngContract(int(spec.get("base_seed", 0))).stream(_AUX_REP_OFFSET)
                root = find_stationary_multiplier(
                    val, comp, delta, gain_share, probe_stream, mu_lo=params.mu_lo, mu_hi=params.mu_hi
                )
                if root.status == "ok":
                    mu_star_est = root.mu
                grid = np.geomspace(params.mu_lo, params.mu_hi, 16)
                deriv_bound = estimate_derivative_bound(val, comp, delta, gain_share, probe_stream, grid)
            report = check_assumptions(
                AssumptionInputs(
                    delta=delta,
                    mu_lo=params.mu_lo,
                    mu_hi=params.mu_hi,
                    eps_max=float(params.step_size.values(probe_t).max()),
                    initial_karma=params.initial_karma,
                    initial_multiplier=params.initial_multiplier,
                    target_rate=params.rate_for(probe_t),
                    n_agents=spec.get("mechanism", {}).get("n_agents"),
                    capacity=spec.get("mechanism", {}).get("capacity"),
                    val_support=val.support(),
                    comp_support=comp_support,
                    comp_mean=comp_mean,
                    stationary_multiplier=mu_star_est,
                    deriv_bound=deriv_bound,
                )
            )
    except (KeyError, TypeError, ValueError) as exc:
        errors.append(f"invalid parameters: {exc}")
    return errors, report


# ---------------------------------------------------------------------------
# Grid construction
# ---------------------------------------------------------------------------


def _grid_points(spec: dict) -> list[dict]:
    kind = spec["kind"]
    if kind == "episode-comparison":
        return [{"grid_id": 0, "horizon": int(spec["horizon"])}]
    if kind == "parallel-nash-gap":
        points = []
        for gid, n in enumerate(spec["population_sizes"]):
            points.append({"grid_id": gid, "horizon": int(spec["horizons"][0]), "n_agents": int(n)})
        return points
    variants = spec.get("variants") or [None]
    points = []
    gid = 0
    for variant in variants:
        for t in spec["horizons"]:
            point = {"grid_id": gid, "horizon": int(t)}
            if variant is not None:
                point["variant"] = variant
            points.append(point)
            gid += 1
    return points


def _param_hash(point: dict) -> str:
    blob = json.dumps(point, sort_keys=True, default=str).encode()
    return hashlib.sha1(blob).hexdigest()[:10]


def _stat_suffix(point: dict) -> str:
    variant = point.get("variant")
    return f":{variant['label']}" if variant else ""


# ---------------------------------------------------------------------------
# Per-replication tasks (top level for pickling)
# ---------------------------------------------------------------------------


def _stationary_stats(spec: dict, point: dict, rep: int) -> dict[str, float]:
    merged = _merge_variant(spec, point.get("variant"))
    horizon = point["horizon"]
    delta = float(merged.get("mechanism", {}).get("time_saving", 5.0))
    agent_cfg = merged["agent"]
    params = _agent_params(agent_cfg, horizon)
    strategy = _STRATEGIES[agent_cfg["strategy"]]()
    streams = RngContract(merged["base_seed"])
    trace = run_stationary(
        params,
        strategy,
        _parse_valuation(merged["valuation"]),
        _parse_competing(merged["competing"]),
        horizon,
        delta,
        streams,
        replication=rep,
        record_trace=False,
    )
    inst = instance_for_trace(trace, params.rate_for(horizon) * horizon, params.gain_share)
    suffix = _stat_suffix(point)
    return {f"regret_per_round{suffix}": regret_vs_hindsight(trace, inst)}


def _population_setup(merged: dict, horizon: int):
    mech_cfg = merged["mechanism"]
    mech = MechanismParams(
        n_agents=int(mech_cfg["n_agents"]),
        capacity=int(mech_cfg["capacity"]),
        horizon=horizon,
        time_saving=float(mech_cfg.get("time_saving", 5.0)),
        n_auctions=int(mech_cfg.get("n_auctions", 1)),
    )
    pop = merged["population"]
    mults = _population_multipliers(pop, mech.n_agents)
    strategy = _STRATEGIES[pop.get("strategy", "karma-pacing")]()
    agents = [(_agent_params(pop, horizon, m), strategy) for m in mults]
    val = _parse_valuation(merged["valuation"])
    redistribute = bool(pop.get("redistribute", True))
    return mech, agents, val, redistribute, mults


def _mu_star_vector(merged: dict, mults: list[float], n: int) -> np.ndarray | None:
    cfg = merged.get("mu_star", {"mode": "symmetric"})
    mode = cfg.get("mode")
    if mode == "symmetric":
        return np.full(n, float(np.mean(mults)))
    if mode == "profile":
        return np.asarray(cfg["values"], dtype=float)
    if mode == "largest-horizon":
        return None  # resolved by a pre-phase before dispatch
    raise SpecError(f"unknown mu_star mode {mode!r}")


def _simultaneous_stats(spec: dict, point: dict, rep: int) -> dict[str, float]:
    merged = _merge_variant(spec, point.get("variant"))
    horizon = point["horizon"]
    mech, agents, val, redistribute, mults = _population_setup(merged, horizon)
    mu_star = _mu_star_vector(merged, mults, mech.n_agents)
    trace = run_simultaneous(
        agents,
        val,
        mech,
        RngContract(merged["base_seed"]),
        replication=rep,
        redistribute=redistribute,
        mu_star=mu_star,
    )
    suffix = _stat_suffix(point)
    stats = {f"final_mean_multiplier{suffix}": float(trace.final_multiplier.mean())}
    if mu_star is not None:
        stats[f"avg_sq_distance{suffix}"] = trace.mean_sq_distance()
    return stats


def _hitting_stats(spec: dict, point: dict, rep: int) -> dict[str, float]:
    merged = _merge_variant(spec, point.get("variant"))
    horizon = point["horizon"]
    mech, agents, val, redistribute, _ = _population_setup(merged, horizon)
    trace = run_simultaneous(
        agents, val, mech, RngContract(merged["base_seed"]), replication=rep, redistribute=redistribute
    )
    t_min = min(h.overall for h in trace.hitting)
    suffix = _stat_suffix(point)
    return {
        f"hit_fraction{suffix}": t_min / horizon,
        f"hit_full{suffix}": 1.0 if t_min == horizon else 0.0,
    }


def _nash_gap_stats(spec: dict, point: dict, rep: int) -> dict[str, float]:
    horizon = point["horizon"]
    n = point["n_agents"]
    mech_cfg = spec["mechanism"]
    auctions_per = int(mech_cfg["agents_per_auction"])
    if n % auctions_per:
        raise SpecError("population sizes must be multiples of agents_per_auction")
    mech = MechanismParams(
        n_agents=n,
        capacity=int(mech_cfg["capacity"]),
        horizon=horizon,
        time_saving=float(mech_cfg.get("time_saving", 5.0)),
        n_auctions=n // auctions_per,
    )
    pop = spec["population"]
    mults = _population_multipliers(pop, n)
    agents = [(_agent_params(pop, horizon, m), KarmaPacing()) for m in mults]
    val = _parse_valuation(spec["valuation"])

    deviations: dict[str, object] = {"self": KarmaPacing()}
    for factor in spec.get("deviation_factors", [0.5, 0.8, 1.25, 2.0]):
        deviations[f"scaled-{factor}"] = ScaledDeviation(float(factor), KarmaPacing())
    deviations["truthful"] = TruthfulCapped(mults[0])
    deviations["hindsight"] = "hindsight"

    gains = run_deviation_family(
        agents,
        deviator=0,
        deviations=deviations,
        mech=mech,
        val_models=val,
        streams=RngContract(spec["base_seed"]),
        replication=rep,
        matching=UniformRandom(),
    )
    return {f"gain:{label}": gain for label, gain in gains.items()}


_TASKS = {
    "stationary-regret": _stationary_stats,
    "discrete-valuations": _stationary_stats,  # simultaneous mode overrides below
    "simultaneous-convergence": _simultaneous_stats,
    "fixed-budget-variable-eps": _simultaneous_stats,
    "hitting-time": _hitting_stats,
    "parallel-nash-gap": _nash_gap_stats,
}


def _task(spec: dict, point: dict, rep: int) -> tuple[int, int, dict[str, float]]:
    kind = spec["kind"]
    if kind == "discrete-valuations" and spec.get("mode") == "simultaneous":
        fn = _simultaneous_stats
    else:
        fn = _TASKS[kind]
    return point["grid_id"], rep, fn(spec, point, rep)


# ---------------------------------------------------------------------------
# Episode comparison (single paired-draw episode, three strategies)
# ---------------------------------------------------------------------------


def _run_episode_comparison(spec: dict, outdir: Path) -> tuple[dict[str, float], Path]:
    horizon = int(spec["horizon"])
    delta = float(spec.get("mechanism", {}).get("time_saving", 5.0))
    streams = RngContract(spec["base_seed"])
    val = _parse_valuation(spec["valuation"])
    comp = _parse_competing(spec["competing"])

    traces = {}
    for label, cfg in spec["agents"].items():
        params = _agent_params(cfg, horizon)
        strategy = _STRATEGIES[cfg["strategy"]]()
        traces[label] = run_stationary(params, strategy, val, comp, horizon, delta, streams, record_trace=True)

    series_path = outdir / "series.csv"
    with open(series_path, "w", newline="") as fh:
        fh.write("strategy,t,multiplier,cum_saved\n")
        for label, trace in traces.items():
            cum = trace.cumulative_saved(0)
            mu = trace.multiplier[0]
            for t in range(horizon):
                fh.write(f"{label},{t + 1},{mu[t]:.10g},{cum[t]:.10g}\n")

    stats: dict[str, float] = {}
    for label, trace in traces.items():
        stats[f"final_multiplier:{label}"] = float(trace.final_multiplier[0])
        stats[f"total_saved:{label}"] = float(trace.saved[0])
    labels = list(traces)
    lead = labels[0]
    for other in labels[1:]:
        stats[f"saved_ratio:{lead}_over_{other}"] = stats[f"total_saved:{lead}"] / stats[f"total_saved:{other}"]
    gain_aware = [l for l, cfg in spec["agents"].items() if cfg["strategy"] == "rate-pacing-gain"]
    if gain_aware:
        mu = traces[gain_aware[0]].multiplier[0]
        zeros = np.nonzero(mu <= 0.0)[0]
        first = int(zeros[0]) if zeros.size else horizon
        stats["plateau_first_zero_round"] = float(first + 1 if zeros.size else math.inf)
        if zeros.size:
            tail = mu[first:]
            stats["plateau_zero_fraction_after"] = float(np.mean(tail <= 0.0))
            stats["plateau_mean_after"] = float(tail.mean())
            stats["plateau_max_after"] = float(tail.max())
    return stats, series_path


# ---------------------------------------------------------------------------
# Runner
# ---------------------------------------------------------------------------


@dataclass
class SweepResult:
    rows: list[dict]
    slopes: list[dict]
    manifest: dict
    outdir: Path

    def stat_series(self, stat_name: str) -> list[tuple[int, float, float, float]]:
        """(T, mean, ci_lo, ci_hi) tuples for one statistic, ordered by T."""
        picked = [r for r in self.rows if r["stat_name"] == stat_name]
        return sorted((r["T"], r["mean"], r["ci_lo"], r["ci_hi"]) for r in picked)


def _worker_count(workers: int | None) -> int:
    if workers is not None:
        return max(1, workers)
    env = os.environ.get("KARMAPACE_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _resolve_mu_star_prephase(spec: dict) -> dict:
    """Replace a largest-horizon stationary-profile convention by an explicit
    profile, estimated from the converged mean at the largest grid horizon."""
    cfg = spec.get("mu_star")
    if not cfg or cfg.get("mode") != "largest-horizon":
        return spec
    horizon = int(max(spec["horizons"]))
    mech, agents, val, redistribute, _ = _population_setup(spec, horizon)
    reps = int(cfg.get("estimate_reps", 5))
    profiles = []
    for rep in range(reps):
        trace = run_simultaneous(
            agents,
            val,
            mech,
            RngContract(spec["base_seed"]),
            replication=_AUX_REP_OFFSET + rep,
            redistribute=redistribute,
        )
        profiles.append(trace.final_multiplier)
    resolved = dict(spec)
    resolved["mu_star"] = {"mode": "profile", "values": [float(x) for x in np.mean(profiles, axis=0)]}
    return resolved


def run_experiment(spec: dict, outdir, workers: int | None = None) -> SweepResult:
    """Execute a spec and write results.csv, slopes.csv, and manifest.json."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    kind = spec["kind"]
    reps = int(spec.get("replications", 1))
    points = _grid_points(spec)

    rows: list[dict] = []
    if kind == "episode-comparison":
        stats, _ = _run_episode_comparison(spec, outdir)
        point = points[0]
        for stat_name in sorted(stats):
            rows.append(
                {
                    "grid_id": point["grid_id"],
                    "T": point["horizon"],
                    "param_hash": _param_hash(point),
                    "stat_name": stat_name,
                    "mean": stats[stat_name],
                    "ci_lo": stats[stat_name],
                    "ci_hi": stats[stat_name],
                    "n_reps": 1,
                }
            )
    else:
        spec = _resolve_mu_star_prephase(spec)
        tasks = [(point, rep) for point in points for rep in range(reps)]
        per_point: dict[tuple[int, int], dict[str, float]] = {}
        n_workers = _worker_count(workers)
        if n_workers > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=n_workers) as pool:
                futures = [pool.submit(_task, spec, point, rep) for point, rep in tasks]
                for fut in futures:
                    gid, rep, stats = fut.result()
                    per_point[(gid, rep)] = stats
        else:
            for point, rep in tasks:
                gid, rep, stats = _task(spec, point, rep)
                per_point[(gid, rep)] = stats

        for point in points:
            gid = point["grid_id"]
            stat_names = sorted(per_point[(gid, 0)])
            for stat_name in stat_names:
                values = np.array([per_point[(gid, rep)][stat_name] for rep in range(reps)])
                mean, lo, hi = mean_ci(values)
                rows.append(
                    {
                        "grid_id": gid,
                        "T": point["horizon"],
                        "param_hash": _param_hash(point),
                        "stat_name": stat_name,
                        "mean": mean,
                        "ci_lo": lo,
                        "ci_hi": hi,
                        "n_reps": reps,
                    }
                )

    slopes = _fit_slopes(rows)
    manifest = {
        "spec": spec,
        "base_seed": spec["base_seed"],
        "package_version": __version__,
        "backend": BACKEND,
        "grid": points,
    }
    _write_results(outdir / "results.csv", rows)
    _write_slopes(outdir / "slopes.csv", slopes)
    (outdir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
    return SweepResult(rows, slopes, manifest, outdir)


def _fit_slopes(rows: list[dict]) -> list[dict]:
    by_stat: dict[str, list[tuple[int, float]]] = {}
    for row in rows:
        by_stat.setdefault(row["stat_name"], []).append((row["T"], row["mean"]))
    slopes = []
    for stat_name in sorted(by_stat):
        points = sorted(by_stat[stat_name])
        if len(points) < 3 or any(y <= 0 for _, y in points) or len({t for t, _ in points}) < 3:
            continue
        slope, stderr = fit_loglog_slope(points)
        slopes.append({"stat_name": stat_name, "slope": slope, "stderr": stderr, "n_points": len(points)})
    return slopes


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def _write_results(path: Path, rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(RESULTS_COLUMNS) + "\n")
        for row in sorted(rows, key=lambda r: (r["grid_id"], r["stat_name"])):
            fh.write(",".join(_fmt(row[c]) for c in RESULTS_COLUMNS) + "\n")


def _write_slopes(path: Path, slopes: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(SLOPES_COLUMNS) + "\n")
        for row in slopes:
            fh.write(",".join(_fmt(row[c]) for c in SLOPES_COLUMNS) + "\n")
