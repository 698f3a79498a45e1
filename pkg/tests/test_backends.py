"""Compiled extension and pure-Python fallback must agree bit for bit on
traces; order-sensitive diagnostics agree to float-reordering tolerance."""

import numpy as np
import pytest

from karmapace import _backend
from karmapace.core import (
    AgentParams,
    ContinuousUniform,
    DiscreteUniform,
    HorizonPower,
    IidPair,
    MechanismParams,
    RngContract,
    UniformRandom,
)
from karmapace.sim import run_parallel, run_stationary
from karmapace.strategies import AdaptivePacing, AdaptivePacingWithGain, KarmaPacing

pytestmark = pytest.mark.skipif(
    "cython" not in _backend.available_backends(), reason="compiled extension not built"
)

TRACE_FIELDS = ("valuations", "bids", "winners", "payments", "gains", "karma", "multiplier")


@pytest.fixture
def per_backend(monkeypatch):
    def run(fn):
        results = {}
        for name in ("cython", "python"):
            monkeypatch.setattr(_backend, "kernels", _backend.get_kernels(name))
            results[name] = fn()
        return results["cython"], results["python"]

    return run


@pytest.mark.parametrize("strategy", [KarmaPacing(), AdaptivePacing(), AdaptivePacingWithGain()])
def test_stationary_traces_identical(per_backend, strategy):
    params = AgentParams(100.0, 5.0, step_size=HorizonPower(2.0, -0.5), gain_share=0.1, target_rate=0.2)

    def episode():
        return run_stationary(
            params, strategy, ContinuousUniform(0, 1), IidPair(ContinuousUniform(0, 1)), 3000, 5.0, RngContract(21)
        )

    a, b = per_backend(episode)
    for field in TRACE_FIELDS + ("competing_hi", "competing_lo", "cost", "saved"):
        assert np.array_equal(getattr(a, field), getattr(b, field)), field
    assert a.hitting == b.hitting


@pytest.mark.parametrize("valuation", [ContinuousUniform(0, 1), DiscreteUniform(10)], ids=["continuous", "tied-bids"])
def test_parallel_traces_identical(per_backend, valuation):
    mech = MechanismParams(n_agents=30, capacity=3, horizon=1500, time_saving=5.0, n_auctions=3)
    agents = [
        (AgentParams(200.0, 5.0 if i % 2 else 6.0, step_size=HorizonPower(1.0, -0.5)), KarmaPacing())
        for i in range(30)
    ]

    def episode():
        return run_parallel(
            agents,
            valuation,
            mech,
            UniformRandom(),
            RngContract(22),
            record_trace=True,
            record_competing=True,
            mu_star=np.full(30, 5.5),
        )

    a, b = per_backend(episode)
    for field in TRACE_FIELDS + ("competing_hi", "competing_lo", "cost", "saved", "final_karma", "final_multiplier"):
        assert np.array_equal(getattr(a, field), getattr(b, field)), field
    assert a.hitting == b.hitting
    assert abs(a.sum_sq_distance - b.sum_sq_distance) <= 1e-9 * (1 + abs(a.sum_sq_distance))
    assert abs(a.max_multiplier_sum_dev - b.max_multiplier_sum_dev) <= 1e-9
