import math

import numpy as np
import pytest
from scipy import integrate, stats

from karmapace.core import (
    AgentParams,
    Constant,
    ContinuousUniform,
    Empirical,
    Fixed,
    HorizonPower,
    IidPair,
    RngContract,
)
from karmapace.hindsight import HindsightInstance
from karmapace.metrics import (
    AssumptionInputs,
    CheckStatus,
    check_assumptions,
    convergence_distance,
    estimate_dual_point,
    find_stationary_multiplier,
    fit_loglog_slope,
    instance_for_trace,
    mean_ci,
    regret_vs_hindsight,
)
from karmapace.sim import run_stationary
from karmapace.strategies import KarmaPacing, TruthfulCapped

UNIT_UNIFORM = IidPair(ContinuousUniform(0, 1), price_setter_allowed=False)


class TestDualEstimates:
    def test_zero_valuation(self):
        est = estimate_dual_point(3.0, Constant(0.0), UNIT_UNIFORM, 5.0, 0.1, 5000, RngContract(0).stream())
        assert est.expenditure == 0.0
        assert math.isclose(est.loss, -est.gain)
        assert math.isclose(est.psi0, -3.0 * est.gain, rel_tol=1e-12)

    def test_huge_multiplier_never_wins(self):
        mu = 1e9
        est = estimate_dual_point(mu, ContinuousUniform(0, 1), UNIT_UNIFORM, 5.0, 0.1, 20000, RngContract(1).stream())
        assert est.expenditure == 0.0
        # psi ~ E[v] - mu*E[gain]; the gain is the second-top competing bid
        assert math.isclose(est.psi0, 0.5 - mu * est.gain, rel_tol=1e-6)

    def test_expenditure_against_quadrature_oracle(self):
        # E[d * 1{delta*v > mu*d}] for v,d ~ U[0,1] via numeric double integral
        delta, mu = 5.0, 5.0
        oracle, _ = integrate.dblquad(
            lambda d, v: d * (delta * v > mu * d), 0, 1, lambda v: 0, lambda v: 1
        )
        est = estimate_dual_point(mu, ContinuousUniform(0, 1), UNIT_UNIFORM, delta, 0.1, 200_000, RngContract(2).stream())
        assert abs(est.expenditure - oracle) < 3 * est.se_expenditure

    def test_loss_is_expenditure_minus_gain(self):
        est = estimate_dual_point(2.0, ContinuousUniform(0, 1), UNIT_UNIFORM, 5.0, 0.1, 10000, RngContract(3).stream())
        assert math.isclose(est.loss, est.expenditure - est.gain, rel_tol=1e-12)

    def test_standard_errors_scale_with_samples(self):
        ses = []
        for n in (10**3, 10**4, 10**5):
            est = estimate_dual_point(5.0, ContinuousUniform(0, 1), UNIT_UNIFORM, 5.0, 0.1, n, RngContract(4).stream())
            ses.append(est.se_loss)
        for i in range(2):
            ratio = ses[i] / ses[i + 1]
            assert math.sqrt(10) / 1.5 < ratio < math.sqrt(10) * 1.5

    def test_input_validation(self):
        with pytest.raises(ValueError):
            estimate_dual_point(0.0, Constant(1.0), UNIT_UNIFORM, 5.0, 0.1, 100, RngContract(0).stream())
        with pytest.raises(ValueError):
            estimate_dual_point(1.0, Constant(1.0), UNIT_UNIFORM, 5.0, 0.1, 1, RngContract(0).stream())


class TestStationaryMultiplier:
    def test_closed_form_root_uniform(self):
        # Z(mu) = 25/(6 mu^2) for mu >= 5 and G = 0.05 give mu* = sqrt(250/3)
        root = find_stationary_multiplier(
            ContinuousUniform(0, 1), UNIT_UNIFORM, 5.0, 0.1, RngContract(5).stream(), tol=5e-3
        )
        assert root.status == "ok"
        assert abs(root.mu - math.sqrt(250.0 / 3.0)) < 0.15

    def test_cross_validated_by_long_simulation(self):
        root = find_stationary_multiplier(
            ContinuousUniform(0, 1), UNIT_UNIFORM, 5.0, 0.1, RngContract(6).stream(), tol=5e-3
        )
        params = AgentParams(10_000.0, 5.0, step_size=Fixed(0.02), gain_share=0.1)
        trace = run_stationary(
            params, KarmaPacing(), ContinuousUniform(0, 1), UNIT_UNIFORM, 200_000, 5.0, RngContract(7)
        )
        sim_mean = trace.multiplier[0, 100_000:].mean()
        assert abs(root.mu - sim_mean) / sim_mean < 0.02

    def test_degenerate_zero_prices(self):
        comp = Empirical(((0.0, 0.0),))
        root = find_stationary_multiplier(ContinuousUniform(0, 1), comp, 5.0, 0.1, RngContract(8).stream())
        assert root.status == "degenerate"

    def test_point_mass_boundary_root(self):
        # constant v=1, point-mass d=0.5: the loss flips sign at delta*v/d = 10
        comp = Empirical(((0.5, 0.5),))
        root = find_stationary_multiplier(Constant(1.0), comp, 5.0, 0.1, RngContract(9).stream(), tol=1e-3)
        assert root.status == "ok"
        assert abs(root.mu - 10.0) < 0.05

    def test_no_sign_change_reported(self):
        # gains always exceed any possible expenditure -> loss negative everywhere
        comp = Empirical(((0.01, 0.01),))
        root = find_stationary_multiplier(Constant(0.0), comp, 5.0, 1.0, RngContract(10).stream())
        assert root.status == "no-sign-change"


class TestRegret:
    def _trace(self, strategy, seed=11, gain_share=0.1, k1=50.0, horizon=2000):
        params = AgentParams(k1, 5.0, step_size=HorizonPower(1.0, -0.5), gain_share=gain_share)
        trace = run_stationary(
            params, strategy, ContinuousUniform(0, 1), UNIT_UNIFORM, horizon, 5.0, RngContract(seed)
        )
        return trace, params

    def test_benchmark_lower_bounds_realized_cost(self):
        for seed in range(6):
            trace, params = self._trace(KarmaPacing(), seed=seed)
            inst = instance_for_trace(trace, params.initial_karma, params.gain_share)
            assert regret_vs_hindsight(trace, inst) >= -1e-9

    def test_replaying_the_benchmark_plan_is_within_one_item(self):
        # realize a sample path, solve the benchmark, replay its plan as
        # bids: with no gains the budget prefix can never bind, so the
        # realized cost exceeds the relaxed optimum by at most the one
        # fractional round
        from karmapace.hindsight import solve_fractional
        from karmapace.sim import run_stationary as run
        from karmapace.strategies import HindsightReplay

        horizon = 300
        probe, _ = self._trace(TruthfulCapped(1e12), seed=18, gain_share=0.0, horizon=horizon)
        budget = 0.3 * horizon
        inst = instance_for_trace(probe, budget, 0.0)
        plan = solve_fractional(inst).fractional_plan
        bids = tuple(np.where(plan >= 0.5, probe.competing_hi[0] * (1 + 1e-9) + 1e-12, 0.0))
        params = AgentParams(budget, 5.0, step_size=Fixed(0.01), gain_share=0.0)
        trace = run(
            params, HindsightReplay(bids), ContinuousUniform(0, 1), UNIT_UNIFORM, horizon, 5.0, RngContract(18)
        )
        regret = regret_vs_hindsight(trace, inst)
        assert -1e-9 <= regret <= 5.0 * trace.valuations[0].max() / horizon

    def test_never_bidding_has_nonnegative_regret(self):
        trace, params = self._trace(TruthfulCapped(1e12), seed=12)
        inst = instance_for_trace(trace, params.initial_karma, params.gain_share)
        assert math.isclose(trace.cost[0], trace.valuations[0].sum())
        assert regret_vs_hindsight(trace, inst) >= 0.0

    def test_horizon_mismatch_rejected(self):
        trace, params = self._trace(KarmaPacing(), seed=13)
        inst = HindsightInstance(np.ones(7), np.ones(7), 5.0, 1.0)
        with pytest.raises(ValueError):
            regret_vs_hindsight(trace, inst)


class TestConvergenceDistance:
    def test_zero_at_stationary_profile(self):
        trace, _ = TestRegret()._trace(TruthfulCapped(5.0), seed=14)
        series, avg = convergence_distance(trace, np.array([5.0]))
        assert np.all(series == 0.0)
        assert avg == 0.0

    def test_single_agent_distance(self):
        trace, _ = TestRegret()._trace(KarmaPacing(), seed=15)
        series, avg = convergence_distance(trace, np.array([9.0]))
        assert series.shape == (trace.horizon,)
        assert math.isclose(avg, series.mean())


class TestSlopeFit:
    def test_exact_power_law(self):
        t = np.array([100, 1000, 10000, 100000])
        slope, stderr = fit_loglog_slope(list(zip(t, 3.0 * t**-0.5)))
        assert abs(slope + 0.5) < 1e-12
        assert stderr < 1e-12

    def test_constant_series(self):
        slope, _ = fit_loglog_slope([(10, 2.0), (100, 2.0), (1000, 2.0)])
        assert abs(slope) < 1e-12

    def test_noisy_power_law(self):
        rng = RngContract(16).stream()
        t = np.logspace(2, 5, 12)
        y = t**-1.0 * np.exp(rng.normal(0, 0.1, 12))
        slope, stderr = fit_loglog_slope(list(zip(t, y)))
        assert abs(slope + 1.0) < 0.05

    def test_validation(self):
        with pytest.raises(ValueError):
            fit_loglog_slope([(10, 1.0), (100, 0.5)])
        with pytest.raises(ValueError):
            fit_loglog_slope([(10, 1.0), (100, 0.5), (1000, -0.1)])


class TestMeanCi:
    def test_against_direct_t_interval(self):
        rng = RngContract(17).stream()
        x = rng.normal(0, 1, 30)
        mean, lo, hi = mean_ci(x)
        half = stats.t.ppf(0.975, 29) * x.std(ddof=1) / math.sqrt(30)
        assert math.isclose(mean, x.mean())
        assert math.isclose(hi - mean, half)
        assert math.isclose(mean - lo, half)


class TestAssumptionChecks:
    def _inputs(self, **over):
        base = dict(
            delta=5.0,
            mu_lo=0.1,
            mu_hi=1000.0,
            eps_max=0.01,
            n_agents=50,
            capacity=5,
            initial_karma=1e6,
            initial_multiplier=5.0,
            target_rate=0.05,
            val_support=(0.1, 1.0),
            comp_support=(0.1, 1.0),
            comp_mean=0.55,
            mean_initial_multiplier=5.5,
            stationary_multiplier=9.1,
        )
        base.update(over)
        return AssumptionInputs(**base)

    def _by_name(self, report):
        return {item.name: item for item in report}

    def test_positive_support_config_passes_box_items(self):
        report = self._by_name(check_assumptions(self._inputs()))
        for name in (
            "root-inside-multiplier-box",
            "competing-bids-below-max-bid",
            "target-rate-below-net-supply",
            "lower-bound-permits-winning",
            "upper-bound-permits-losing",
            "step-size-within-box-margins",
            "budget-covers-box-travel",
        ):
            assert report[name].status == CheckStatus.PASS, (name, report[name].detail)

    def test_enormous_step_size_fails(self):
        report = self._by_name(check_assumptions(self._inputs(eps_max=1e6)))
        assert report["step-size-within-box-margins"].status == CheckStatus.FAIL
        assert report["shared-step-size-margin"].status == CheckStatus.FAIL

    def test_curvature_item_never_checkable(self):
        report = self._by_name(check_assumptions(self._inputs()))
        assert report["step-size-vs-loss-slope"].status == CheckStatus.NOT_CHECKABLE

    def test_missing_supports_are_not_checkable(self):
        report = self._by_name(check_assumptions(self._inputs(val_support=None, comp_support=None)))
        assert report["lower-bound-permits-winning"].status == CheckStatus.NOT_CHECKABLE

    def test_zero_minimum_valuation_fails_win_guarantee(self):
        report = self._by_name(check_assumptions(self._inputs(val_support=(0.0, 1.0))))
        assert report["lower-bound-permits-winning"].status == CheckStatus.FAIL
