"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line and enforcing the stated tolerance and runtime budget.

These run the bundled experiment protocols at full replication counts; on
eight cores the whole module takes a few minutes.
"""

import json
import time

from karmapace.core import (
    AgentParams,
    ContinuousUniform,
    HorizonPower,
    MechanismParams,
    RngContract,
)
from karmapace.experiments import load_spec, run_experiment
from karmapace.hindsight import HindsightInstance, solve_dual, solve_exact_01, solve_fractional
from karmapace.sim import run_simultaneous
from karmapace.strategies import KarmaPacing


def _report(name: str, ok: bool, detail: str) -> None:
    print(f"\nACCEPTANCE {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"{name}: {detail}"


def _series(result, stat):
    return result.stat_series(stat)


def _spec(name, **overrides):
    spec = json.loads(json.dumps(load_spec(name)))
    spec.update(overrides)
    return spec


def test_conservation_suite(tmp_path):
    t0 = time.perf_counter()
    horizon = 10_000
    mech = MechanismParams(n_agents=50, capacity=5, horizon=horizon, time_saving=5.0)
    agents = [
        (
            AgentParams(3.0 * horizon**0.5, 5.0 if i < 25 else 6.0, step_size=HorizonPower(1.0, -0.5)),
            KarmaPacing(),
        )
        for i in range(50)
    ]
    trace = run_simultaneous(agents, ContinuousUniform(0, 1), mech, RngContract(314159))
    elapsed = time.perf_counter() - t0
    karma_rel = trace.max_karma_sum_dev / (50 * 3.0 * horizon**0.5)
    mu_rel = trace.max_multiplier_sum_dev / (25 * 5.0 + 25 * 6.0)
    ok = karma_rel < 1e-6 and mu_rel < 1e-6 and elapsed < 5.0
    _report(
        "conservation-suite",
        ok,
        f"karma dev {karma_rel:.2e}, multiplier dev {mu_rel:.2e}, {elapsed:.2f}s",
    )


def test_hindsight_oracle_suite():
    t0 = time.perf_counter()
    rng = RngContract(271828).stream()
    worst_gap = 0.0
    for _ in range(1000):
        t_len = int(rng.integers(5, 201))
        inst = HindsightInstance(
            rng.random(t_len),
            rng.random(t_len),
            5.0,
            float(rng.random() * 0.3 * t_len),
            float(rng.choice([0.0, 0.1])),
        )
        sol = solve_fractional(inst)
        _, dual_value = solve_dual(inst)
        worst_gap = max(worst_gap, abs(sol.cost - dual_value) / (1 + abs(sol.cost)))
    duality_ok = worst_gap <= 1e-9

    sandwich_ok = True
    for _ in range(200):
        t_len = int(rng.integers(5, 21))
        inst = HindsightInstance(
            rng.random(t_len), rng.random(t_len), 5.0, float(rng.random() * 0.3 * t_len), 0.0
        )
        frac = solve_fractional(inst).cost
        exact = solve_exact_01(inst)
        ceiling = frac + 5.0 * inst.valuations.max()
        if not (frac - 1e-9 <= exact <= ceiling + 1e-9):
            sandwich_ok = False
            break
    elapsed = time.perf_counter() - t0
    ok = duality_ok and sandwich_ok and elapsed < 30.0
    _report(
        "hindsight-oracle-suite",
        ok,
        f"max relative duality gap {worst_gap:.2e}, sandwich {'ok' if sandwich_ok else 'violated'}, {elapsed:.1f}s",
    )


def test_rate_pacing_regret_rate(tmp_path):
    t0 = time.perf_counter()
    result = run_experiment(_spec("fig1a-rate-pacing-regret"), tmp_path)
    elapsed = time.perf_counter() - t0
    slope = next(s for s in result.slopes if s["stat_name"] == "regret_per_round")["slope"]
    ok = -0.65 <= slope <= -0.35 and elapsed < 600
    _report("rate-pacing-regret-rate", ok, f"log-log slope {slope:.3f}, {elapsed:.0f}s")


def test_karma_pacing_regret_decay(tmp_path):
    t0 = time.perf_counter()
    result = run_experiment(_spec("fig1b-karma-pacing-regret"), tmp_path)
    elapsed = time.perf_counter() - t0
    pts = _series(result, "regret_per_round")
    means = [m for _, m, _, _ in pts]
    decreasing = all(a > b for a, b in zip(means, means[1:]))
    separated = pts[0][2] > pts[-1][3]  # first ci_lo above last ci_hi
    ok = decreasing and separated and elapsed < 600
    _report(
        "karma-pacing-regret-decay",
        ok,
        f"means {['%.4f' % m for m in means]}, CIs separated={separated}, {elapsed:.0f}s",
    )


def test_simultaneous_learning_convergence(tmp_path):
    t0 = time.perf_counter()
    result = run_experiment(_spec("fig1d-karma-pacing-convergence"), tmp_path)
    elapsed = time.perf_counter() - t0
    dist = [m for _, m, _, _ in _series(result, "avg_sq_distance")]
    decreasing = all(a > b for a, b in zip(dist, dist[1:]))
    final_mu = _series(result, "final_mean_multiplier")[-1][1]
    ok = decreasing and abs(final_mu - 5.5) <= 0.1 and elapsed < 600
    _report(
        "simultaneous-learning-convergence",
        ok,
        f"avg distances {['%.3f' % d for d in dist]}, final mean multiplier {final_mu:.4f}, {elapsed:.0f}s",
    )


def test_hitting_time_study(tmp_path):
    t0 = time.perf_counter()
    result = run_experiment(_spec("fig2a-hitting-time"), tmp_path)
    elapsed = time.perf_counter() - t0
    fractions = _series(result, "hit_full")
    top_two = [m for _, m, _, _ in fractions[-2:]]
    ok = all(m == 1.0 for m in top_two) and elapsed < 600
    _report(
        "hitting-time-study",
        ok,
        f"full-horizon fraction per T {['%.2f' % m for _, m, _, _ in fractions]}, {elapsed:.0f}s",
    )


def test_episode_comparison(tmp_path):
    t0 = time.perf_counter()
    result = run_experiment(_spec("fig3-episode-comparison"), tmp_path)
    elapsed = time.perf_counter() - t0
    stats = {r["stat_name"]: r["mean"] for r in result.rows}
    ratio_a = stats["saved_ratio:K_over_A"]
    ratio_v = stats["saved_ratio:K_over_A-gain"]
    mu_k = stats["final_multiplier:K"]
    mu_a = stats["final_multiplier:A"]
    horizon = result.manifest["spec"]["horizon"]
    plateau = (
        stats["plateau_first_zero_round"] <= 0.1 * horizon
        and stats["plateau_zero_fraction_after"] >= 0.8
        and stats["final_multiplier:A-gain"] <= 0.05
    )
    ok = (
        ratio_a >= 2.0
        and ratio_v >= 2.0
        and 0.15 <= mu_k <= 0.4
        and 1.2 <= mu_a <= 1.9
        and plateau
        and elapsed < 600
    )
    _report(
        "episode-comparison",
        ok,
        f"saved ratios {ratio_a:.2f}/{ratio_v:.2f}, multipliers K {mu_k:.3f} A {mu_a:.3f} "
        f"variant-plateau {plateau}, {elapsed:.0f}s",
    )


def test_deviation_harness(tmp_path):
    t0 = time.perf_counter()
    spec = _spec("nash-gap-parallel", population_sizes=[50])
    result = run_experiment(spec, tmp_path)
    elapsed = time.perf_counter() - t0
    rows = {r["stat_name"]: r for r in result.rows}
    self_row = rows["gain:self"]
    self_zero = self_row["mean"] == 0.0 and self_row["ci_lo"] == 0.0 and self_row["ci_hi"] == 0.0
    family = {k: v for k, v in rows.items() if k != "gain:self"}
    worst = max(family.values(), key=lambda r: r["ci_hi"])
    bound = 0.02 * 5.0
    ok = self_zero and worst["ci_hi"] < bound and elapsed < 600
    _report(
        "deviation-harness",
        ok,
        f"self gain exactly zero={self_zero}, max upper CI {worst['ci_hi']:.4f} "
        f"({worst['stat_name']}) vs bound {bound}, {elapsed:.0f}s",
    )


def test_discrete_and_unbounded_robustness(tmp_path):
    t0 = time.perf_counter()
    regret = run_experiment(_spec("fig2c-discrete-valuations-regret"), tmp_path / "regret")
    convergence = run_experiment(_spec("fig2d-discrete-valuations-convergence"), tmp_path / "conv")
    elapsed = time.perf_counter() - t0
    trends = {}
    for label in ("discrete-uniform", "geometric"):
        r_means = [m for _, m, _, _ in _series(regret, f"regret_per_round:{label}")]
        c_means = [m for _, m, _, _ in _series(convergence, f"avg_sq_distance:{label}")]
        trends[f"regret:{label}"] = all(a > b for a, b in zip(r_means, r_means[1:]))
        trends[f"distance:{label}"] = all(a > b for a, b in zip(c_means, c_means[1:]))
    ok = all(trends.values()) and elapsed < 600
    _report("discrete-unbounded-robustness", ok, f"decreasing trends {trends}, {elapsed:.0f}s")
