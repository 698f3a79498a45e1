import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from karmapace.core import RngContract
from karmapace.hindsight import (
    HindsightInstance,
    hindsight_no_gain,
    solve_dual,
    solve_exact_01,
    solve_fractional,
)


def random_instance(rng, t_len, delta=5.0, gain_share=0.0):
    v = rng.random(t_len)
    d = rng.random(t_len)
    budget = float(rng.random() * t_len * 0.3)
    return HindsightInstance(v, d, delta, budget, gain_share)


class TestFractional:
    def test_two_item_hand_instance(self):
        # enumerated by hand: budget fits exactly one item, the better ratio wins
        inst = HindsightInstance([1.0, 0.2], [0.5, 0.5], time_saving=1.0, budget=0.5)
        sol = solve_fractional(inst)
        assert np.array_equal(sol.fractional_plan, [1.0, 0.0])
        assert math.isclose(sol.cost, 0.2)
        assert math.isclose(sol.dual_multiplier, 0.4)

    def test_zero_budget_wins_nothing(self):
        inst = HindsightInstance([0.5, 0.7], [0.2, 0.3], time_saving=1.0, budget=0.0)
        sol = solve_fractional(inst)
        assert np.array_equal(sol.fractional_plan, [0.0, 0.0])
        assert math.isclose(sol.cost, 1.2)

    def test_slack_budget_wins_everything(self):
        v = np.array([0.5, 0.7, 0.1])
        inst = HindsightInstance(v, [0.2, 0.3, 0.1], time_saving=5.0, budget=10.0)
        sol = solve_fractional(inst)
        assert np.array_equal(sol.fractional_plan, [1.0, 1.0, 1.0])
        assert math.isclose(sol.cost, (1 - 5.0) * v.sum())
        assert sol.dual_multiplier == 0.0

    def test_free_rounds_taken_first(self):
        inst = HindsightInstance([0.1, 0.9], [0.0, 1.0], time_saving=1.0, budget=0.0)
        sol = solve_fractional(inst)
        assert sol.fractional_plan[0] == 1.0
        assert sol.fractional_plan[1] == 0.0

    def test_at_most_one_fractional(self):
        rng = RngContract(0).stream()
        for _ in range(200):
            sol = solve_fractional(random_instance(rng, 40))
            frac = (sol.fractional_plan > 1e-12) & (sol.fractional_plan < 1 - 1e-12)
            assert frac.sum() <= 1

    def test_budget_feasibility(self):
        rng = RngContract(1).stream()
        for _ in range(200):
            inst = random_instance(rng, 30, gain_share=0.1)
            sol = solve_fractional(inst)
            spend = float(sol.fractional_plan @ inst.competing)
            assert spend <= inst.win_budget + 1e-9

    def test_monotone_in_budget(self):
        rng = RngContract(2).stream()
        v = rng.random(25)
        d = rng.random(25)
        costs = [solve_fractional(HindsightInstance(v, d, 5.0, b)).cost for b in np.linspace(0, d.sum(), 15)]
        assert all(a >= b - 1e-12 for a, b in zip(costs, costs[1:]))


class TestDual:
    def test_hand_instance_matches_primal(self):
        # breakpoints 2 and 0.4 evaluated by hand; the max sits at 0.4
        inst = HindsightInstance([1.0, 0.2], [0.5, 0.5], time_saving=1.0, budget=0.5)
        mu, value = solve_dual(inst)
        assert math.isclose(value, 0.2)
        assert math.isclose(mu, 0.4)

    def test_all_free_rounds(self):
        v = np.array([0.3, 0.6])
        inst = HindsightInstance(v, [0.0, 0.0], time_saving=0.5, budget=1.0)
        mu, value = solve_dual(inst)
        assert mu == 0.0
        assert math.isclose(value, (1 - 0.5) * v.sum())

    def test_degenerate_zero_budget(self):
        inst = HindsightInstance([0.5, 0.2], [0.4, 0.9], time_saving=5.0, budget=0.0)
        mu, value = solve_dual(inst)
        assert math.isinf(mu)
        assert math.isclose(value, 0.7)

    @given(st.integers(0, 2**32 - 1), st.integers(5, 60))
    @settings(max_examples=80, deadline=None)
    def test_strong_duality(self, seed, t_len):
        inst = random_instance(RngContract(seed).stream(), t_len, gain_share=0.05)
        sol = solve_fractional(inst)
        _, dual_value = solve_dual(inst)
        scale = 1e-9 * (1 + abs(sol.cost))
        assert abs(sol.cost - dual_value) <= scale
        assert abs(sol.cost - sol.dual_value) <= scale


class TestExact01:
    def test_single_round_win(self):
        inst = HindsightInstance([1.0], [0.5], time_saving=0.5, budget=0.5)
        assert math.isclose(solve_exact_01(inst), 0.5)

    def test_single_round_cannot_afford(self):
        inst = HindsightInstance([1.0], [0.5], time_saving=0.5, budget=0.4)
        assert math.isclose(solve_exact_01(inst), 1.0)

    def test_sandwiched_by_relaxation(self):
        rng = RngContract(3).stream()
        for _ in range(25):
            inst = random_instance(rng, 12)
            frac = solve_fractional(inst).cost
            exact = solve_exact_01(inst)
            assert frac <= exact + 1e-9
            assert exact <= frac + inst.time_saving * inst.valuations.max() + 1e-9

    def test_refuses_large_horizons(self):
        with pytest.raises(ValueError):
            solve_exact_01(HindsightInstance(np.ones(23), np.ones(23), 1.0, 1.0))


class TestNoGainVariant:
    def test_specializes_to_zero_gain_share(self):
        v = [0.9, 0.1]
        d = [0.4, 0.4]
        sol = hindsight_no_gain(v, d, time_saving=1.0, budget=0.4)
        assert np.array_equal(sol.fractional_plan, [1.0, 0.0])
        assert math.isclose(sol.cost, 0.1)

    def test_slack_budget_wins_all(self):
        sol = hindsight_no_gain([0.5, 0.5], [0.1, 0.1], time_saving=1.0, budget=5.0)
        assert np.array_equal(sol.fractional_plan, [1.0, 1.0])
