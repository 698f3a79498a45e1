"""Seeded simulation engine and experiment harness for repeated
resource-allocation auctions run on a redistributed artificial currency.

The hot episode loops live in a compiled extension with a pure-Python
fallback chosen at import time; see `karmapace._backend`.
"""

__version__ = "0.1.0"

from ._backend import BACKEND as backend_name  # noqa: F401
from .core import (  # noqa: F401
    AgentParams,
    CompetingBidModel,
    Constant,
    ContinuousUniform,
    DiscreteUniform,
    Empirical,
    Fixed,
    Geometric,
    HorizonPower,
    IidPair,
    MatchingModel,
    MechanismParams,
    OrderStatisticPair,
    PowerLaw,
    RngContract,
    StepSchedule,
    UniformRandom,
    ValuationModel,
    matching_probabilities,
    sample_valuation,
)
from .strategies import (  # noqa: F401
    AdaptivePacing,
    AdaptivePacingWithGain,
    AgentState,
    HindsightReplay,
    KarmaPacing,
    ScaledDeviation,
    TruthfulCapped,
    hitting_time,
)
from .sim import Trace, run_parallel, run_simultaneous, run_stationary  # noqa: F401
