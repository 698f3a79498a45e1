# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled episode kernels.

Mirrors `_kernels_py` operation for operation (same arithmetic order per
agent) so that traces agree bit-for-bit with the fallback; see that module
for the semantics. Only the auction selection differs structurally: a
fixed-size top-(capacity+2) insertion buffer replaces the full sort, which
yields the same ordering because (bid, priority) pairs are almost surely
distinct.
"""

import numpy as np

BACKEND_NAME = "cython"

STRAT_K = 0
STRAT_A = 1
STRAT_A_GAIN = 2
STRAT_TRUTHFUL = 3
STRAT_REPLAY = 4

cdef enum:
    _STRAT_K = 0
    _STRAT_A = 1
    _STRAT_A_GAIN = 2
    _STRAT_TRUTHFUL = 3
    _STRAT_REPLAY = 4


def run_single_agent(
    double[::1] v,
    double[::1] d_hi,
    double[::1] d_lo,
    double[::1] eps,
    double delta,
    double gain_share,
    double mu_lo,
    double mu_hi,
    double mu0,
    double k0,
    int strategy,
    double rho,
    double factor,
    double fixed_mu,
    replay_bids,
    trace_b,
    trace_x,
    trace_z,
    trace_g,
    trace_k,
    trace_mu,
):
    cdef Py_ssize_t horizon = v.shape[0]
    cdef double mu = mu0
    cdef double k = k0
    cdef double cost = 0.0
    cdef double saved = 0.0
    cdef double budget_floor = delta / mu_lo
    cdef Py_ssize_t hit_b = horizon
    cdef Py_ssize_t hit_lo = horizon
    cdef Py_ssize_t hit_hi = horizon
    cdef bint record = trace_b is not None

    cdef double[::1] replay_mv = replay_bids if replay_bids is not None else None
    cdef double[::1] tb = trace_b if record else None
    cdef double[::1] tx = trace_x if record else None
    cdef double[::1] tz = trace_z if record else None
    cdef double[::1] tg = trace_g if record else None
    cdef double[::1] tk = trace_k if record else None
    cdef double[::1] tm = trace_mu if record else None

    cdef Py_ssize_t t
    cdef double vt, dv, mu_c, raw, b, dh, dl, x, z, p, g, eps_t, m2

    for t in range(horizon):
        if hit_b == horizon and k < budget_floor:
            hit_b = t
        if hit_lo == horizon and mu < mu_lo:
            hit_lo = t
        if hit_hi == horizon and mu > mu_hi:
            hit_hi = t

        vt = v[t]
        dv = delta * vt
        if strategy == _STRAT_K:
            mu_c = mu
            if mu_c < mu_lo:
                mu_c = mu_lo
            elif mu_c > mu_hi:
                mu_c = mu_hi
            raw = dv / mu_c
        elif strategy == _STRAT_A:
            raw = dv / mu
        elif strategy == _STRAT_A_GAIN:
            raw = dv / (1.0 + mu)
        elif strategy == _STRAT_TRUTHFUL:
            raw = dv / fixed_mu
        else:
            raw = replay_mv[t]
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
            tb[t] = b
            tx[t] = x
            tz[t] = z
            tg[t] = g
            tk[t] = k
            tm[t] = mu

        eps_t = eps[t]
        if strategy == _STRAT_K:
            mu = mu + eps_t * (z - g)
        elif strategy == _STRAT_A:
            m2 = mu + eps_t * (z - rho)
            if m2 < mu_lo:
                m2 = mu_lo
            elif m2 > mu_hi:
                m2 = mu_hi
            mu = m2
        elif strategy == _STRAT_A_GAIN:
            m2 = mu + eps_t * (z - g - rho)
            if m2 < 0.0:
                m2 = 0.0
            elif m2 > mu_hi:
                m2 = mu_hi
            mu = m2
        k = k - z + g

    return cost, saved, mu, k, hit_b, hit_lo, hit_hi


cdef inline bint _better(double b1, double p1, double b2, double p2) nogil:
    return b1 > b2 or (b1 == b2 and p1 > p2)


def run_population(
    double[:, ::1] v,
    double[:, ::1] priority,
    int[:, ::1] assign,
    double[::1] eps,
    int n_auctions,
    int capacity,
    double delta,
    double gain_share,
    bint redistribute,
    double mu_lo,
    double mu_hi,
    double[::1] mu0,
    double[::1] k0,
    int[::1] strategy,
    double[::1] rho,
    double[::1] factor,
    double[::1] fixed_mu,
    replay_bids,
    mu_star,
    double[::1] cost,
    double[::1] saved,
    double[::1] final_mu,
    double[::1] final_k,
    long[::1] hit_budget,
    long[::1] hit_mu_lo,
    long[::1] hit_mu_hi,
    double[::1] accum,
    trace_b,
    trace_x,
    trace_z,
    trace_g,
    trace_k,
    trace_mu,
    trace_dhi,
    trace_dlo,
):
    cdef Py_ssize_t n = v.shape[0]
    cdef Py_ssize_t horizon = v.shape[1]
    cdef Py_ssize_t gamma = capacity
    cdef Py_ssize_t buf_cap = gamma + 2

    mu_arr = np.ascontiguousarray(mu0).copy()
    k_arr = np.ascontiguousarray(k0).copy()
    cdef double[::1] mu = mu_arr
    cdef double[::1] k = k_arr

    scratch_b = np.zeros(n)
    scratch_x = np.zeros(n)
    scratch_z = np.zeros(n)
    cdef double[::1] b = scratch_b
    cdef double[::1] x = scratch_x
    cdef double[::1] z = scratch_z

    counts_arr = np.zeros(n_auctions, dtype=np.intp)
    offsets_arr = np.zeros(n_auctions + 1, dtype=np.intp)
    cursor_arr = np.zeros(n_auctions, dtype=np.intp)
    members_arr = np.zeros(n, dtype=np.intp)
    cdef Py_ssize_t[::1] counts = counts_arr
    cdef Py_ssize_t[::1] offsets = offsets_arr
    cdef Py_ssize_t[::1] cursor = cursor_arr
    cdef Py_ssize_t[::1] members = members_arr

    top_b_arr = np.zeros(buf_cap)
    top_p_arr = np.zeros(buf_cap)
    top_i_arr = np.zeros(buf_cap, dtype=np.intp)
    cdef double[::1] top_b = top_b_arr
    cdef double[::1] top_p = top_p_arr
    cdef Py_ssize_t[::1] top_i = top_i_arr

    cdef bint record = trace_b is not None
    cdef bint record_d = trace_dhi is not None
    cdef bint track_dist = mu_star is not None

    cdef double[::1] replay_mv = replay_bids if replay_bids is not None else None
    cdef double[::1] mu_star_mv = mu_star if track_dist else None
    cdef double[:, ::1] tb = trace_b if record else None
    cdef double[:, ::1] tx = trace_x if record else None
    cdef double[:, ::1] tz = trace_z if record else None
    cdef double[:, ::1] tg = trace_g if record else None
    cdef double[:, ::1] tk = trace_k if record else None
    cdef double[:, ::1] tm = trace_mu if record else None
    cdef double[:, ::1] tdh = trace_dhi if record_d else None
    cdef double[:, ::1] tdl = trace_dlo if record_d else None

    cdef double budget_floor = delta / mu_lo
    cdef double mu_sum0 = 0.0
    cdef double k_sum0 = 0.0
    cdef double sum_dist = 0.0
    cdef double max_mu_dev = 0.0
    cdef double max_k_dev = 0.0

    cdef Py_ssize_t i, t, m, pos, ins, lo_idx, hi_idx, agent, r
    cdef Py_ssize_t p_count, buf_len, n_win, start
    cdef double s, diff, vt_i, dv_i, mu_c, raw, bid_i, price, total_price
    cdef double g, eps_t, m2, kg, kg1, kg2, dval
    cdef int code

    for i in range(n):
        cost[i] = 0.0
        saved[i] = 0.0
        hit_budget[i] = horizon
        hit_mu_lo[i] = horizon
        hit_mu_hi[i] = horizon
        mu_sum0 += mu[i]
        k_sum0 += k[i]

    for t in range(horizon):
        # hitting-time checks and population diagnostics at bid time
        s = 0.0
        for i in range(n):
            if hit_budget[i] == horizon and k[i] < budget_floor:
                hit_budget[i] = t
            if hit_mu_lo[i] == horizon and mu[i] < mu_lo:
                hit_mu_lo[i] = t
            if hit_mu_hi[i] == horizon and mu[i] > mu_hi:
                hit_mu_hi[i] = t
            s += mu[i]
        if s - mu_sum0 > max_mu_dev:
            max_mu_dev = s - mu_sum0
        elif mu_sum0 - s > max_mu_dev:
            max_mu_dev = mu_sum0 - s
        s = 0.0
        for i in range(n):
            s += k[i]
        if s - k_sum0 > max_k_dev:
            max_k_dev = s - k_sum0
        elif k_sum0 - s > max_k_dev:
            max_k_dev = k_sum0 - s
        if track_dist:
            s = 0.0
            for i in range(n):
                diff = mu[i] - mu_star_mv[i]
                s += diff * diff
            sum_dist += s

        # bids
        for i in range(n):
            vt_i = v[i, t]
            dv_i = delta * vt_i
            code = strategy[i]
            if code == _STRAT_K:
                mu_c = mu[i]
                if mu_c < mu_lo:
                    mu_c = mu_lo
                elif mu_c > mu_hi:
                    mu_c = mu_hi
                raw = dv_i / mu_c
            elif code == _STRAT_A:
                raw = dv_i / mu[i]
            elif code == _STRAT_A_GAIN:
                raw = dv_i / (1.0 + mu[i])
            elif code == _STRAT_TRUTHFUL:
                raw = dv_i / fixed_mu[i]
            else:
                raw = replay_mv[t]
            bid_i = raw * factor[i]
            if bid_i > k[i]:
                bid_i = k[i]
            b[i] = bid_i
            x[i] = 0.0
            z[i] = 0.0

        # bucket agents by auction
        for m in range(n_auctions):
            counts[m] = 0
        for i in range(n):
            counts[assign[i, t]] += 1
        offsets[0] = 0
        for m in range(n_auctions):
            offsets[m + 1] = offsets[m] + counts[m]
            cursor[m] = offsets[m]
        for i in range(n):
            m = assign[i, t]
            members[cursor[m]] = i
            cursor[m] += 1

        # clear each auction
        total_price = 0.0
        for m in range(n_auctions):
            start = offsets[m]
            p_count = offsets[m + 1] - start
            if p_count == 0:
                continue
            buf_len = 0
            for pos in range(start, start + p_count):
                i = members[pos]
                if buf_len == buf_cap:
                    if not _better(b[i], priority[i, t], top_b[buf_cap - 1], top_p[buf_cap - 1]):
                        continue
                    ins = buf_cap - 1
                else:
                    ins = buf_len
                    buf_len += 1
                while ins > 0 and _better(b[i], priority[i, t], top_b[ins - 1], top_p[ins - 1]):
                    top_b[ins] = top_b[ins - 1]
                    top_p[ins] = top_p[ins - 1]
                    top_i[ins] = top_i[ins - 1]
                    ins -= 1
                top_b[ins] = b[i]
                top_p[ins] = priority[i, t]
                top_i[ins] = i

            if p_count >= gamma + 1:
                price = top_b[gamma]
                n_win = gamma
            else:
                price = 0.0
                n_win = p_count
            for pos in range(n_win):
                i = top_i[pos]
                x[i] = 1.0
                z[i] = price
            total_price += price

            if record_d:
                # order statistics over the other participants, zero-padded
                kg = top_b[gamma - 1] if gamma <= p_count else 0.0
                kg1 = top_b[gamma] if gamma + 1 <= p_count else 0.0
                kg2 = top_b[gamma + 1] if gamma + 2 <= p_count else 0.0
                for pos in range(start, start + p_count):
                    i = members[pos]
                    tdh[i, t] = kg
                    tdl[i, t] = kg1
                buf_len = p_count if p_count < buf_cap else buf_cap
                for pos in range(buf_len):
                    i = top_i[pos]
                    r = pos + 1
                    tdh[i, t] = kg1 if r <= gamma else kg
                    tdl[i, t] = kg2 if r <= gamma + 1 else kg1

        g = gain_share * total_price if redistribute else 0.0

        eps_t = eps[t]
        for i in range(n):
            vt_i = v[i, t]
            if x[i] == 1.0:
                cost[i] += vt_i * (1.0 - delta)
                saved[i] += delta * vt_i
            else:
                cost[i] += vt_i

            if record:
                tb[i, t] = b[i]
                tx[i, t] = x[i]
                tz[i, t] = z[i]
                tg[i, t] = g
                tk[i, t] = k[i]
                tm[i, t] = mu[i]

            code = strategy[i]
            if code == _STRAT_K:
                mu[i] = mu[i] + eps_t * (z[i] - g)
            elif code == _STRAT_A:
                m2 = mu[i] + eps_t * (z[i] - rho[i])
                if m2 < mu_lo:
                    m2 = mu_lo
                elif m2 > mu_hi:
                    m2 = mu_hi
                mu[i] = m2
            elif code == _STRAT_A_GAIN:
                m2 = mu[i] + eps_t * (z[i] - g - rho[i])
                if m2 < 0.0:
                    m2 = 0.0
                elif m2 > mu_hi:
                    m2 = mu_hi
                mu[i] = m2
            k[i] = k[i] - z[i] + g

    s = 0.0
    for i in range(n):
        s += mu[i]
    if s - mu_sum0 > max_mu_dev:
        max_mu_dev = s - mu_sum0
    elif mu_sum0 - s > max_mu_dev:
        max_mu_dev = mu_sum0 - s
    s = 0.0
    for i in range(n):
        s += k[i]
    if s - k_sum0 > max_k_dev:
        max_k_dev = s - k_sum0
    elif k_sum0 - s > max_k_dev:
        max_k_dev = k_sum0 - s

    for i in range(n):
        final_mu[i] = mu[i]
        final_k[i] = k[i]
    accum[0] = sum_dist
    accum[1] = max_mu_dev
    accum[2] = max_k_dev
