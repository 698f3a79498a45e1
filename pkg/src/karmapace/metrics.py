"""Estimators and diagnostics over traces and distribution models.

Covers the Monte-Carlo dual quantities (objective, expenditure, gain, loss),
the stationary-multiplier root finder, regret against the hindsight
benchmark, convergence distances, log-log slope fits, confidence intervals,
and the closed-form parameter-design checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import stats

from .core import CompetingBidModel, ValuationModel
from .hindsight import HindsightInstance, solve_fractional
from .sim import Trace

__all__ = [
    "DualEstimates",
    "estimate_dual_point",
    "StationaryRoot",
    "find_stationary_multiplier",
    "instance_for_trace",
    "regret_vs_hindsight",
    "convergence_distance",
    "fit_loglog_slope",
    "mean_ci",
    "AssumptionInputs",
    "AssumptionCheck",
    "CheckStatus",
    "check_assumptions",
    "estimate_derivative_bound",
]


@dataclass(frozen=True)
class DualEstimates:
    """Monte-Carlo point estimates of the dual quantities at one multiplier."""

    psi0: float
    expenditure: float
    gain: float
    loss: float
    se_psi0: float
    se_expenditure: float
    se_gain: float
    se_loss: float
    n_samples: int


def _mean_se(samples: np.ndarray) -> tuple[float, float]:
    n = samples.shape[0]
    return float(samples.mean()), float(samples.std(ddof=1) / math.sqrt(n))


def estimate_dual_point(
    mu: float,
    val_model: ValuationModel,
    comp_model: CompetingBidModel,
    delta: float,
    gain_share: float,
    n_samples: int,
    stream: np.random.Generator,
) -> DualEstimates:
    """Sample the dual objective, expenditure, gain, and loss at ``mu``.

    The gain uses the realized auction price induced by the unclamped bid
    delta*v/mu: the top competing bid when winning, the bid itself when it
    falls between the two competing bids, the second-top bid otherwise.
    """
    if mu <= 0:
        raise ValueError("multiplier must be positive")
    if n_samples < 2:
        raise ValueError("need at least two samples for a variance estimate")
    v = np.asarray(val_model.sample(stream, n_samples), dtype=float)
    d_hi, d_lo = comp_model.sample_pairs(stream, n_samples)
    dv = delta * v
    win = dv > mu * d_hi
    z = np.where(win, d_hi, 0.0)
    b = dv / mu
    price = np.where(win, d_hi, np.where(b > d_lo, b, d_lo))
    g = gain_share * price
    psi = v - mu * g - np.maximum(dv - mu * d_hi, 0.0)
    loss = z - g

    psi_m, psi_se = _mean_se(psi)
    z_m, z_se = _mean_se(z)
    g_m, g_se = _mean_se(g)
    l_m, l_se = _mean_se(loss)
    return DualEstimates(psi_m, z_m, g_m, l_m, psi_se, z_se, g_se, l_se, n_samples)


@dataclass(frozen=True)
class StationaryRoot:
    """Root of the expected loss, with bisection diagnostics."""

    mu: float
    loss: float
    loss_se: float
    bracket: tuple[float, float]
    status: str  # "ok", "no-sign-change", or "degenerate"


def find_stationary_multiplier(
    val_model: ValuationModel,
    comp_model: CompetingBidModel,
    delta: float,
    gain_share: float,
    stream: np.random.Generator,
    mu_lo: float = 0.1,
    mu_hi: float = 1000.0,
    tol: float = 1e-2,
    n_base: int = 8192,
    n_max: int = 1 << 19,
) -> StationaryRoot:
    """Bisection on the Monte-Carlo expected loss, escalating sample sizes
    as the bracket shrinks.

    The loss is decreasing in the multiplier, so a root needs a positive
    loss at ``mu_lo`` and a negative one at ``mu_hi``; anything else is
    reported instead of guessed at.
    """

    def loss_at(mu: float, n: int) -> tuple[float, float]:
        est = estimate_dual_point(mu, val_model, comp_model, delta, gain_share, n, stream)
        return est.loss, est.se_loss

    n_edge = min(n_max, n_base * 16)
    lo_loss, lo_se = loss_at(mu_lo, n_edge)
    hi_loss, hi_se = loss_at(mu_hi, n_edge)
    if abs(lo_loss) <= 3 * lo_se and abs(hi_loss) <= 3 * hi_se:
        return StationaryRoot(math.nan, 0.0, max(lo_se, hi_se), (mu_lo, mu_hi), "degenerate")
    if not (lo_loss > 0 > hi_loss):
        side = mu_lo if abs(lo_loss) < abs(hi_loss) else mu_hi
        return StationaryRoot(side, lo_loss if side == mu_lo else hi_loss, lo_se, (mu_lo, mu_hi), "no-sign-change")

    lo, hi = mu_lo, mu_hi
    mid_loss, mid_se = lo_loss, lo_se
    for it in range(60):
        mid = 0.5 * (lo + hi)
        n = min(n_max, n_base * (1 << min(it // 2, 12)))
        mid_loss, mid_se = loss_at(mid, n)
        if mid_loss > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * max(1.0, mid) and abs(mid_loss) <= 3 * mid_se:
            break
    mu = 0.5 * (lo + hi)
    return StationaryRoot(mu, mid_loss, mid_se, (lo, hi), "ok")


def instance_for_trace(trace: Trace, budget: float, gain_share: float, agent: int = 0) -> HindsightInstance:
    """Build the benchmark instance for an agent's realized sample path."""
    if trace.competing_hi is None:
        raise ValueError("trace must carry the competing-bid series")
    return HindsightInstance(
        valuations=trace.valuations[agent],
        competing=trace.competing_hi[agent],
        time_saving=trace.time_saving,
        budget=budget,
        gain_share=gain_share,
    )


def regret_vs_hindsight(trace: Trace, inst: HindsightInstance, agent: int = 0) -> float:
    """Per-round excess of the realized cost over the benchmark optimum."""
    if inst.horizon != trace.horizon:
        raise ValueError("instance and trace horizons differ")
    benchmark = solve_fractional(inst).cost
    return (float(trace.cost[agent]) - benchmark) / trace.horizon


def convergence_distance(trace: Trace, mu_star: np.ndarray) -> tuple[np.ndarray, float]:
    """Per-round squared distance of the multiplier profile to a stationary
    profile, plus its time average."""
    if trace.multiplier is None:
        raise ValueError("trace must carry the multiplier series")
    mu_star = np.asarray(mu_star, dtype=float)
    diff = trace.multiplier - mu_star[:, None]
    series = np.einsum("it,it->t", diff, diff)
    return series, float(series.mean())


def fit_loglog_slope(points) -> tuple[float, float]:
    """OLS slope of log(y) on log(T) with its standard error."""
    pts = [(float(t), float(y)) for t, y in points]
    if len(pts) < 3:
        raise ValueError("need at least three points")
    if any(y <= 0 or t <= 0 for t, y in pts):
        raise ValueError("log-log fit requires positive values")
    x = np.log([t for t, _ in pts])
    y = np.log([v for _, v in pts])
    n = x.shape[0]
    xc = x - x.mean()
    sxx = float(xc @ xc)
    slope = float(xc @ (y - y.mean())) / sxx
    resid = y - y.mean() - slope * xc
    sigma2 = float(resid @ resid) / (n - 2)
    return slope, math.sqrt(sigma2 / sxx)


def mean_ci(values: np.ndarray, level: float = 0.95) -> tuple[float, float, float]:
    """Two-sided t-interval (mean, lo, hi); degenerate for a single value."""
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    m = float(values.mean())
    if n < 2:
        return m, m, m
    half = float(stats.t.ppf(0.5 + level / 2, n - 1) * values.std(ddof=1) / math.sqrt(n))
    return m, m - half, m + half


# ---------------------------------------------------------------------------
# Parameter-design checks
# ---------------------------------------------------------------------------


class CheckStatus(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    NOT_CHECKABLE = "not-checkable"


@dataclass(frozen=True)
class AssumptionCheck:
    name: str
    status: CheckStatus
    detail: str


@dataclass(frozen=True)
class AssumptionInputs:
    """Everything the closed-form design inequalities can be evaluated from.

    Optional fields left as None mark their checks not-checkable. Support
    bounds refer to the valuation / competing-bid distributions; the
    curvature constant of the expected loss has no constructive estimate, so
    its step-size check is never checkable.
    """

    delta: float
    mu_lo: float
    mu_hi: float
    eps_max: float
    n_agents: int | None = None
    capacity: int | None = None
    initial_karma: float | None = None
    initial_multiplier: float | None = None
    target_rate: float | None = None
    val_support: tuple[float, float] | None = None
    comp_support: tuple[float, float] | None = None
    comp_mean: float | None = None
    mean_initial_multiplier: float | None = None
    stationary_multiplier: float | None = None
    deriv_bound: float | None = None
    matching_norm: float | None = None


def _item(name: str, ok: bool, detail: str) -> AssumptionCheck:
    return AssumptionCheck(name, CheckStatus.PASS if ok else CheckStatus.FAIL, detail)


def _skip(name: str, why: str) -> AssumptionCheck:
    return AssumptionCheck(name, CheckStatus.NOT_CHECKABLE, why)


def check_assumptions(cfg: AssumptionInputs) -> list[AssumptionCheck]:
    """Evaluate every closed-form parameter inequality available.

    Items whose distribution-dependent inputs are missing, and the
    curvature-dependent step-size bound, come back not-checkable.
    """
    out: list[AssumptionCheck] = []
    delta, mu_lo, mu_hi, eps = cfg.delta, cfg.mu_lo, cfg.mu_hi, cfg.eps_max

    if cfg.stationary_multiplier is None or math.isnan(cfg.stationary_multiplier):
        out.append(_skip("root-inside-multiplier-box", "no stationary-multiplier estimate"))
    else:
        ms = cfg.stationary_multiplier
        out.append(_item("root-inside-multiplier-box", mu_lo < ms < mu_hi, f"mu_lo {mu_lo} < {ms:.4g} < mu_hi {mu_hi}"))

    if cfg.comp_support is None:
        out.append(_skip("competing-bids-below-max-bid", "no competing-bid support bounds"))
    else:
        d_min, d_max = cfg.comp_support
        out.append(
            _item("competing-bids-below-max-bid", d_max <= delta / mu_lo, f"d_max {d_max:.4g} vs delta/mu_lo {delta / mu_lo:.4g}")
        )

    if cfg.target_rate is None or cfg.comp_mean is None or cfg.capacity is None or cfg.n_agents is None:
        out.append(_skip("target-rate-below-net-supply", "needs target rate, competing-bid mean, and capacity share"))
    else:
        bound = (1.0 - cfg.capacity / cfg.n_agents) * cfg.comp_mean
        out.append(
            _item(
                "target-rate-below-net-supply",
                0.0 < cfg.target_rate < bound,
                f"0 < rho {cfg.target_rate:.4g} < {bound:.4g}",
            )
        )

    out.append(_skip("step-size-vs-loss-slope", "loss-curvature constant has no constructive estimate"))

    if cfg.deriv_bound is None:
        out.append(_skip("step-size-vs-derivative-bound", "no derivative-bound estimate supplied"))
    else:
        out.append(
            _item(
                "step-size-vs-derivative-bound",
                eps <= 1.0 / cfg.deriv_bound,
                f"eps {eps:.4g} vs 1/deriv_bound {1.0 / cfg.deriv_bound:.4g}",
            )
        )

    if cfg.val_support is None or cfg.comp_support is None:
        out.append(_skip("lower-bound-permits-winning", "needs valuation and competing-bid support"))
        out.append(_skip("upper-bound-permits-losing", "needs competing-bid support"))
        out.append(_skip("step-size-within-box-margins", "needs valuation and competing-bid support"))
    else:
        v_min, _ = cfg.val_support
        d_min, d_max = cfg.comp_support
        win_margin = delta * v_min / d_max**2 if d_max > 0 else math.inf
        lose_margin = delta / d_min if d_min > 0 else math.inf
        out.append(_item("lower-bound-permits-winning", mu_lo < win_margin, f"mu_lo {mu_lo} vs {win_margin:.4g}"))
        out.append(_item("upper-bound-permits-losing", mu_hi > lose_margin, f"mu_hi {mu_hi} vs {lose_margin:.4g}"))
        if math.isinf(win_margin) or math.isinf(lose_margin) or d_max <= 0:
            out.append(_skip("step-size-within-box-margins", "degenerate support bounds"))
        else:
            margin = min(win_margin - mu_lo, (mu_hi - lose_margin) / d_max)
            out.append(_item("step-size-within-box-margins", eps < margin, f"eps {eps:.4g} vs margin {margin:.4g}"))

    if cfg.initial_karma is None or cfg.initial_multiplier is None:
        out.append(_skip("budget-covers-box-travel", "needs initial karma and multiplier"))
    else:
        need = (mu_hi - cfg.initial_multiplier) / eps + delta / mu_lo
        out.append(
            _item("budget-covers-box-travel", cfg.initial_karma > need, f"k1 {cfg.initial_karma:.4g} vs {need:.4g}")
        )

    if (
        cfg.val_support is None
        or cfg.mean_initial_multiplier is None
        or cfg.capacity is None
        or cfg.n_agents is None
    ):
        out.append(_skip("shared-lower-bound-vs-mean", "needs valuation support and population shape"))
        out.append(_skip("shared-upper-bound-vs-mean", "needs valuation support and population shape"))
        out.append(_skip("shared-step-size-margin", "needs valuation support and population shape"))
    else:
        v_min, _ = cfg.val_support
        mu_m = cfg.mean_initial_multiplier
        share = cfg.capacity / cfg.n_agents
        out.append(
            _item("shared-lower-bound-vs-mean", 0 < mu_lo < 0.5 * v_min * mu_m, f"mu_lo {mu_lo} vs {0.5 * v_min * mu_m:.4g}")
        )
        if v_min > 0:
            need_hi = mu_m * (1.0 + (2.0 / v_min) / (1.0 - share) - 0.5 * v_min)
            out.append(_item("shared-upper-bound-vs-mean", mu_hi >= need_hi, f"mu_hi {mu_hi} vs {need_hi:.4g}"))
            ratio = cfg.n_agents / cfg.capacity
            margin = (mu_m * mu_lo / delta) * min(
                (1.0 - 0.5 * v_min) * ratio,
                (0.5 * v_min) / (1.0 + (v_min + 1.0) * share),
                1.0 / (v_min * (1.0 - share**2)),
            )
            out.append(_item("shared-step-size-margin", eps < margin, f"eps {eps:.4g} vs margin {margin:.4g}"))
        else:
            out.append(_item("shared-upper-bound-vs-mean", False, "valuation support reaches zero"))
            out.append(_item("shared-step-size-margin", False, "valuation support reaches zero"))

    if cfg.matching_norm is None:
        out.append(_skip("matching-influence-vanishes", "no matching-probability norm supplied"))
    else:
        out.append(
            _skip("matching-influence-vanishes", f"sqrt(N)*max row norm = {cfg.matching_norm:.4g}; limit condition not checkable from one configuration")
        )
    return out


def estimate_derivative_bound(
    val_model: ValuationModel,
    comp_model: CompetingBidModel,
    delta: float,
    gain_share: float,
    stream: np.random.Generator,
    mu_grid: np.ndarray,
    n_samples: int = 1 << 15,
) -> float:
    """Plug-in bound on |dZ/dmu| + |dG/dmu| via central differences."""
    mu_grid = np.asarray(mu_grid, dtype=float)
    z = np.empty(mu_grid.shape[0])
    g = np.empty(mu_grid.shape[0])
    for i, mu in enumerate(mu_grid):
        est = estimate_dual_point(float(mu), val_model, comp_model, delta, gain_share, n_samples, stream)
        z[i] = est.expenditure
        g[i] = est.gain
    dz = np.abs(np.diff(z) / np.diff(mu_grid))
    dg = np.abs(np.diff(g) / np.diff(mu_grid))
    return float(dz.max() + dg.max())
