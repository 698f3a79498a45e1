import math

import numpy as np
import pytest

from karmapace.core import AgentParams, ContinuousUniform, Fixed, IidPair, RngContract
from karmapace.sim import run_stationary
from karmapace.strategies import (
    AdaptivePacing,
    AgentState,
    KarmaPacing,
    ScaledDeviation,
    bid_A,
    bid_A_gain,
    bid_K,
    hitting_time,
    update_A,
    update_A_gain,
    update_K,
)

PARAMS = AgentParams(initial_karma=100.0, initial_multiplier=5.0, mu_lo=0.1, mu_hi=1000.0)


class TestKarmaPacingRules:
    def test_bid_formula(self):
        s = AgentState(karma=100.0, multiplier=2.0)
        assert bid_K(s, 0.5, 5.0, PARAMS) == 1.25

    def test_bid_clamps_low_multiplier(self):
        s = AgentState(karma=100.0, multiplier=0.05)
        assert bid_K(s, 1.0, 5.0, PARAMS) == 50.0

    def test_budget_cap_binds(self):
        s = AgentState(karma=3.0, multiplier=0.1)
        assert bid_K(s, 1.0, 5.0, PARAMS) == 3.0

    def test_update_moves_by_loss(self):
        s = update_K(AgentState(karma=10.0, multiplier=5.0), z=0.3, g=0.04, eps_t=0.01)
        assert math.isclose(s.multiplier, 5.0026)
        assert math.isclose(s.karma, 10.0 - 0.26)
        assert s.round == 2

    def test_zero_loss_is_stationary(self):
        s = update_K(AgentState(karma=10.0, multiplier=5.0), z=0.1, g=0.1, eps_t=0.5)
        assert s.multiplier == 5.0
        assert s.karma == 10.0

    def test_update_never_projects(self):
        s = update_K(AgentState(karma=10.0, multiplier=0.12), z=0.0, g=0.1, eps_t=0.5)
        assert math.isclose(s.multiplier, 0.07)  # below the bid-side clamp


class TestRatePacingRules:
    def test_bid_uses_unclamped_multiplier(self):
        s = AgentState(karma=100.0, multiplier=10.0)
        assert bid_A(s, 0.4, 5.0, PARAMS) == 0.2

    def test_zero_budget_zero_bid(self):
        s = AgentState(karma=0.0, multiplier=10.0)
        assert bid_A(s, 1.0, 5.0, PARAMS) == 0.0

    def test_max_bid_is_delta_over_mu_lo(self):
        s = AgentState(karma=1e12, multiplier=0.1)
        assert bid_A(s, 1.0, 5.0, PARAMS) == 50.0

    def test_update_projects(self):
        s = update_A(AgentState(karma=10.0, multiplier=1000.0), z=1.0, eps_t=1.0, rho=0.2, mu_lo=0.1, mu_hi=1000.0)
        assert s.multiplier == 1000.0  # projection binds at the top

    def test_update_on_target_is_stationary(self):
        s = update_A(AgentState(karma=10.0, multiplier=5.0), z=0.2, eps_t=1.0, rho=0.2, mu_lo=0.1, mu_hi=1000.0)
        assert s.multiplier == 5.0

    def test_budget_ignores_gains_by_default(self):
        s = update_A(AgentState(karma=10.0, multiplier=5.0), z=0.5, eps_t=0.1, rho=0.2, mu_lo=0.1, mu_hi=1000.0)
        assert s.karma == 9.5


class TestGainAwareVariant:
    def test_bid_has_unit_offset(self):
        s = AgentState(karma=100.0, multiplier=0.5)
        assert bid_A_gain(s, 0.6, 5.0, PARAMS) == 2.0

    def test_projection_floor_is_zero(self):
        s = update_A_gain(AgentState(karma=10.0, multiplier=0.0), z=0.0, g=0.1, eps_t=1.0, rho=0.2, mu_hi=1000.0)
        assert s.multiplier == 0.0

    def test_balanced_update_is_stationary(self):
        s = update_A_gain(AgentState(karma=10.0, multiplier=0.5), z=0.3, g=0.1, eps_t=1.0, rho=0.2, mu_hi=1000.0)
        assert s.multiplier == 0.5


class TestHittingTime:
    def test_all_conditions_hold(self):
        h = hitting_time(np.full(10, 100.0), np.full(10, 5.0), delta=5.0, mu_lo=0.1, mu_hi=1000.0)
        assert h.budget == h.mu_lower == h.mu_upper == h.overall == 10

    def test_budget_violation(self):
        h = hitting_time(np.array([10.0, 10.0, 0.1, 10.0]), np.full(4, 5.0), delta=1.0, mu_lo=1.0, mu_hi=10.0)
        assert h.budget == 2
        assert h.overall == 2

    def test_multiplier_violations(self):
        mu = np.array([5.0, 0.05, 5.0, 2000.0])
        h = hitting_time(np.full(4, 100.0), mu, delta=5.0, mu_lo=0.1, mu_hi=1000.0)
        assert h.mu_lower == 1
        assert h.mu_upper == 3

    def test_empty_series_rejected(self):
        with pytest.raises(ValueError):
            hitting_time(np.array([]), np.array([]), 5.0, 0.1, 1000.0)


class TestTraceProperties:
    """Spec invariants checked on full simulated episodes."""

    def _trace(self, strategy, seed=5, gain_share=0.1, mu1=5.0, k1=30.0):
        params = AgentParams(k1, mu1, step_size=Fixed(0.05), gain_share=gain_share)
        return (
            run_stationary(
                params,
                strategy,
                ContinuousUniform(0, 1),
                IidPair(ContinuousUniform(0, 1)),
                4000,
                5.0,
                RngContract(seed),
            ),
            params,
        )

    def test_karma_pacing_update_is_exactly_unprojected(self):
        # every step is mu + eps*(z - g) with no projection; recomputing the
        # same floating-point operation must reproduce the stored series
        trace, params = self._trace(KarmaPacing())
        eps = params.step_size.values(trace.horizon)
        mu = np.append(trace.multiplier[0], trace.final_multiplier[0])
        flows = trace.payments[0] - trace.gains[0]
        assert np.array_equal(mu[1:], mu[:-1] + eps * flows)

    def test_rate_pacing_stays_inside_box(self):
        trace, params = self._trace(AdaptivePacing(), mu1=1.0, k1=800.0)
        assert np.all(trace.multiplier >= params.mu_lo)
        assert np.all(trace.multiplier <= params.mu_hi)

    @pytest.mark.parametrize("strategy", [KarmaPacing(), AdaptivePacing(), ScaledDeviation(2.0, KarmaPacing())])
    def test_budget_never_negative(self, strategy):
        trace, _ = self._trace(strategy, k1=2.0)
        assert np.all(trace.karma >= 0)
        assert trace.final_karma[0] >= 0

    def test_bids_bounded_by_max_bid_and_budget(self):
        trace, params = self._trace(KarmaPacing(), k1=4.0)
        cap = np.minimum(5.0 * trace.valuations[0] / params.mu_lo, trace.karma[0])
        assert np.all(trace.bids[0] >= 0)
        assert np.all(trace.bids[0] <= cap + 1e-12)
