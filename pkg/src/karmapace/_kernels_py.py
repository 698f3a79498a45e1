"""Pure-Python/NumPy episode kernels.

Fallback used when the compiled extension is unavailable. The compiled
module `_kernels` implements the same two entry points with identical
signatures and identical per-agent arithmetic (same operation order), so
traces agree bit-for-bit across backends; only order-sensitive diagnostics
(population sums) may differ in the last float digits.

Strategy codes: 0 karma pacing, 1 rate pacing, 2 gain-aware rate pacing,
3 fixed-multiplier truthful, 4 replay of a precomputed bid plan.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"

STRAT_K = 0
STRAT_A = 1
STRAT_A_GAIN = 2
STRAT_TRUTHFUL = 3
STRAT_REPLAY = 4


def run_single_agent(
    v,
    d_hi,
    d_lo,
    eps,
    delta,
    gain_share,
    mu_lo,
    mu_hi,
    mu0,
    k0,
    strategy,
    rho,
    factor,
    fixed_mu,
    replay_bids,
    trace_b,
    trace_x,
    trace_z,
    trace_g,
    trace_k,
    trace_mu,
):
    """One agent against an exogenous competing-bid process.

    Returns (cost, saved, final_mu, final_k, hit_budget, hit_mu_lo, hit_mu_hi)
    where the hit_* entries are prefix lengths (first-violation round indices,
    0-based; horizon when never violated).
    """
    horizon = v.shape[0]
    mu = float(mu0)
    k = float(k0)
    cost = 0.0
    saved = 0.0
    budget_floor = delta / mu_lo
    hit_b = horizon
    hit_lo = horizon
    hit_hi = horizon
    record = trace_b is not None

    for t in range(horizon):
        if hit_b == horizon and k < budget_floor:
            hit_b = t
        if hit_lo == horizon and mu < mu_lo:
            hit_lo = t
        if hit_hi == horizon and mu > mu_hi:
            hit_hi = t

        vt = v[t]
        dv = delta * vt
        if strategy == STRAT_K:
            mu_c = mu
            if mu_c < mu_lo:
                mu_c = mu_lo
            elif mu_c > mu_hi:
                mu_c = mu_hi
            raw = dv / mu_c
        elif strategy == STRAT_A:
            raw = dv / mu
        elif strategy == STRAT_A_GAIN:
            raw = dv / (1.0 + mu)
        elif strategy == STRAT_TRUTHFUL:
            raw = dv / fixed_mu
        else:
            raw = replay_bids[t]
        b = raw * factor
        if b > k:
            b = k

        dh = d_hi[t]
        dl = d_lo[t]
        if b > dh:
            x = 1.0
            z = dh
            p = dh
        else:
            x = 0.0
            z = 0.0
            p = b if b > dl else dl
        g = gain_share * p

        if x == 1.0:
            cost += vt * (1.0 - delta)
            saved += dv
        else:
            cost += vt

        if record:
            trace_b[t] = b
            trace_x[t] = x
            trace_z[t] = z
            trace_g[t] = g
            trace_k[t] = k
            trace_mu[t] = mu

        eps_t = eps[t]
        if strategy == STRAT_K:
            mu = mu + eps_t * (z - g)
        elif strategy == STRAT_A:
            m2 = mu + eps_t * (z - rho)
            if m2 < mu_lo:
                m2 = mu_lo
            elif m2 > mu_hi:
                m2 = mu_hi
            mu = m2
        elif strategy == STRAT_A_GAIN:
            m2 = mu + eps_t * (z - g - rho)
            if m2 < 0.0:
                m2 = 0.0
            elif m2 > mu_hi:
                m2 = mu_hi
            mu = m2
        k = k - z + g

    return cost, saved, mu, k, hit_b, hit_lo, hit_hi


def run_population(
    v,
    priority,
    assign,
    eps,
    n_auctions,
    capacity,
    delta,
    gain_share,
    redistribute,
    mu_lo,
    mu_hi,
    mu0,
    k0,
    strategy,
    rho,
    factor,
    fixed_mu,
    replay_bids,
    mu_star,
    cost,
    saved,
    final_mu,
    final_k,
    hit_budget,
    hit_mu_lo,
    hit_mu_hi,
    accum,
    trace_b,
    trace_x,
    trace_z,
    trace_g,
    trace_k,
    trace_mu,
    trace_dhi,
    trace_dlo,
):
    """All agents clearing shared auctions each round.

    Fills the per-agent summary arrays and the three-slot accumulator
    [sum of squared multiplier distances, max multiplier-sum deviation,
    max karma-sum deviation]; trace arrays are filled when not None.
    """
    n, horizon = v.shape
    mu = mu0.astype(float).copy()
    k = k0.astype(float).copy()
    cost[:] = 0.0
    saved[:] = 0.0
    budget_floor = delta / mu_lo
    hit_budget[:] = horizon
    hit_mu_lo[:] = horizon
    hit_mu_hi[:] = horizon
    record = trace_b is not None
    record_d = trace_dhi is not None

    mu_sum0 = float(mu.sum())
    k_sum0 = float(k.sum())
    track_dist = mu_star is not None
    sum_dist = 0.0
    max_mu_dev = 0.0
    max_k_dev = 0.0

    is_k = strategy == STRAT_K
    is_a = strategy == STRAT_A
    is_ag = strategy == STRAT_A_GAIN
    is_replay = strategy == STRAT_REPLAY
    gamma = capacity

    for t in range(horizon):
        hit_budget[(hit_budget == horizon) & (k < budget_floor)] = t
        hit_mu_lo[(hit_mu_lo == horizon) & (mu < mu_lo)] = t
        hit_mu_hi[(hit_mu_hi == horizon) & (mu > mu_hi)] = t

        max_mu_dev = max(max_mu_dev, abs(float(mu.sum()) - mu_sum0))
        max_k_dev = max(max_k_dev, abs(float(k.sum()) - k_sum0))
        if track_dist:
            diff = mu - mu_star
            sum_dist += float(diff @ diff)

        vt = v[:, t]
        dv = delta * vt
        raw = np.empty(n)
        if is_k.any():
            mu_c = np.minimum(np.maximum(mu[is_k], mu_lo), mu_hi)
            raw[is_k] = dv[is_k] / mu_c
        if is_a.any():
            raw[is_a] = dv[is_a] / mu[is_a]
        if is_ag.any():
            raw[is_ag] = dv[is_ag] / (1.0 + mu[is_ag])
        truthful = strategy == STRAT_TRUTHFUL
        if truthful.any():
            raw[truthful] = dv[truthful] / fixed_mu[truthful]
        if is_replay.any():
            raw[is_replay] = replay_bids[t]
        b = raw * factor
        b = np.minimum(b, k)

        x = np.zeros(n)
        z = np.zeros(n)
        total_price = 0.0
        assign_t = assign[:, t]
        prio_t = priority[:, t]
        for m in range(n_auctions):
            members = np.nonzero(assign_t == m)[0]
            p_count = members.shape[0]
            if p_count == 0:
                continue
            order = members[np.lexsort((-prio_t[members], -b[members]))]
            ranked = b[order]
            if p_count >= gamma + 1:
                price = float(ranked[gamma])
                n_win = gamma
            else:
                price = 0.0
                n_win = p_count
            win_set = order[:n_win]
            x[win_set] = 1.0
            z[win_set] = price
            total_price += price
            if record_d:
                def kth(j):
                    return float(ranked[j - 1]) if j <= p_count else 0.0

                trace_dhi[order[gamma:], t] = kth(gamma)
                trace_dlo[order[gamma + 1 :], t] = kth(gamma + 1)
                top = order[: gamma + 2]
                for pos, agent in enumerate(top):
                    r = pos + 1
                    trace_dhi[agent, t] = kth(gamma + 1) if r <= gamma else kth(gamma)
                    trace_dlo[agent, t] = kth(gamma + 2) if r <= gamma + 1 else kth(gamma + 1)

        g = gain_share * total_price if redistribute else 0.0

        won = x == 1.0
        cost[won] += vt[won] * (1.0 - delta)
        cost[~won] += vt[~won]
        saved[won] += dv[won]

        if record:
            trace_b[:, t] = b
            trace_x[:, t] = x
            trace_z[:, t] = z
            trace_g[:, t] = g
            trace_k[:, t] = k
            trace_mu[:, t] = mu

        eps_t = eps[t]
        if is_k.any():
            mu[is_k] = mu[is_k] + eps_t * (z[is_k] - g)
        if is_a.any():
            mu[is_a] = np.minimum(np.maximum(mu[is_a] + eps_t * (z[is_a] - rho[is_a]), mu_lo), mu_hi)
        if is_ag.any():
            mu[is_ag] = np.minimum(np.maximum(mu[is_ag] + eps_t * (z[is_ag] - g - rho[is_ag]), 0.0), mu_hi)
        k = k - z + g

    max_mu_dev = max(max_mu_dev, abs(float(mu.sum()) - mu_sum0))
    max_k_dev = max(max_k_dev, abs(float(k.sum()) - k_sum0))

    final_mu[:] = mu
    final_k[:] = k
    accum[0] = sum_dist
    accum[1] = max_mu_dev
    accum[2] = max_k_dev
