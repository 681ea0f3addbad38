"""Sequential sampling kernels for the three elector-distribution models.

Each kernel consumes pre-drawn uniforms (at most a fixed number per elector)
so results are bit-reproducible regardless of JIT state, and fills every
district/budget exactly. The smoothing constants below seed each reinforcement
fraction with a small amount of prior mass; they are part of the model
definition and were fixed once against the synthetic reference tables.
"""

import numpy as np
from numba import njit

# pseudo-electors mixed into the district count fraction (polarization model)
DPM_COUNT_SMOOTHING = 0.6
# pseudo-tables mixed into the community-party fraction (community model)
ECM_TABLE_SMOOTHING = 1.0
# community-size concentration enters as alpha ** this exponent
ECM_ALPHA_EXPONENT = 1.3
# phantom votes per district seeding each party's placement urn (concentration model)
PCM_DISTRICT_PSEUDO = 1.0


@njit(cache=True, nogil=True)
def _pick(weights, n, target):
    """Index of the first cumulative weight exceeding target; -1 if none."""
    acc = 0.0
    for i in range(n):
        acc += weights[i]
        if target < acc:
            return i
    return -1


@njit(cache=True, nogil=True)
def _first_open(limits, used, n):
    for i in range(n):
        if used[i] < limits[i]:
            return i
    return -1


@njit(cache=True, nogil=True)
def dpm_kernel(capacities, budgets, theta, gamma, uniforms):
    """Round-robin polarization sampler; one uniform per elector."""
    S = capacities.shape[0]
    K = budgets.shape[0]
    c = DPM_COUNT_SMOOTHING
    counts = np.zeros((S, K), dtype=np.int64)
    filled = np.zeros(S, dtype=np.int64)
    placed = np.zeros(K, dtype=np.int64)
    w = np.empty(K, dtype=np.float64)
    u_idx = 0
    max_cap = int(capacities.max())
    for _round in range(max_cap):
        for s in range(S):
            if filled[s] >= capacities[s]:
                continue
            prior = filled[s]
            total = 0.0
            for k in range(K):
                if placed[k] < budgets[k]:
                    frac = (counts[s, k] + c * theta[k]) / (prior + c)
                    w[k] = gamma[s] * frac + (1.0 - gamma[s]) * theta[k]
                else:
                    w[k] = 0.0
                total += w[k]
            target = uniforms[u_idx] * total
            u_idx += 1
            if total <= 0.0:
                pick = -1
            else:
                pick = _pick(w, K, target)
            if pick < 0 or placed[pick] >= budgets[pick]:
                pick = _first_open(budgets, placed, K)
            counts[s, pick] += 1
            placed[pick] += 1
            filled[s] += 1
    return counts


@njit(cache=True, nogil=True)
def ecm_kernel(capacities, budgets, theta, alpha, beta, uniforms, largest_out):
    """Round-robin community sampler; at most two uniforms per elector.

    Electors join open communities by size or open a new one (rate alpha);
    a new community picks its party by mixing the district's existing
    community-party fraction (weight beta) with the national shares.
    Communities of an exhausted party close and leave the choice set.
    Writes each district's largest community size into largest_out.
    """
    S = capacities.shape[0]
    K = budgets.shape[0]
    c = ECM_TABLE_SMOOTHING
    counts = np.zeros((S, K), dtype=np.int64)
    filled = np.zeros(S, dtype=np.int64)
    placed = np.zeros(K, dtype=np.int64)
    party_tables = np.zeros((S, K), dtype=np.int64)
    n_tables = np.zeros(S, dtype=np.int64)
    offsets = np.zeros(S + 1, dtype=np.int64)
    for s in range(S):
        offsets[s + 1] = offsets[s] + capacities[s]
    comm_size = np.zeros(offsets[S], dtype=np.int64)
    comm_dish = np.zeros(offsets[S], dtype=np.int64)
    n_comms = np.zeros(S, dtype=np.int64)
    open_size = np.zeros(S, dtype=np.int64)
    w = np.empty(K, dtype=np.float64)
    u_idx = 0
    max_cap = int(capacities.max())
    for _round in range(max_cap):
        for s in range(S):
            if filled[s] >= capacities[s]:
                continue
            base = offsets[s]
            total = open_size[s] + alpha[s]
            target = uniforms[u_idx] * total
            u_idx += 1
            joined = -1
            if target < open_size[s]:
                acc = 0.0
                for j in range(n_comms[s]):
                    d = comm_dish[base + j]
                    if placed[d] < budgets[d]:
                        acc += comm_size[base + j]
                        if target < acc:
                            joined = j
                            break
            if joined >= 0:
                k = comm_dish[base + joined]
                comm_size[base + joined] += 1
            else:
                total_d = 0.0
                for k2 in range(K):
                    if placed[k2] < budgets[k2]:
                        frac = (party_tables[s, k2] + c * theta[k2]) / (n_tables[s] + c)
                        w[k2] = beta * frac + (1.0 - beta) * theta[k2]
                    else:
                        w[k2] = 0.0
                    total_d += w[k2]
                t2 = uniforms[u_idx] * total_d
                u_idx += 1
                if total_d <= 0.0:
                    k = -1
                else:
                    k = _pick(w, K, t2)
                if k < 0 or placed[k] >= budgets[k]:
                    k = _first_open(budgets, placed, K)
                j = n_comms[s]
                comm_dish[base + j] = k
                comm_size[base + j] = 1
                n_comms[s] += 1
                party_tables[s, k] += 1
                n_tables[s] += 1
            counts[s, k] += 1
            placed[k] += 1
            filled[s] += 1
            open_size[s] += 1
            if placed[k] == budgets[k]:
                for s2 in range(S):
                    b2 = offsets[s2]
                    gone = 0
                    for j2 in range(n_comms[s2]):
                        if comm_dish[b2 + j2] == k:
                            gone += comm_size[b2 + j2]
                    open_size[s2] -= gone
    for s in range(S):
        base = offsets[s]
        big = 0
        for j in range(n_comms[s]):
            if comm_size[base + j] > big:
                big = comm_size[base + j]
        largest_out[s] = big
    return counts


@njit(cache=True, nogil=True)
def pcm_kernel(capacities, budgets, theta, eta, uniforms):
    """Global two-step concentration sampler; two uniforms per elector.

    Each elector first draws a party by national share (budget-masked), then
    a district by mixing the party's own placement fraction (weight eta_k)
    with a uniform spread over districts, masked by remaining capacity.
    """
    S = capacities.shape[0]
    K = budgets.shape[0]
    pseudo = PCM_DISTRICT_PSEUDO
    n_total = 0
    for s in range(S):
        n_total += capacities[s]
    counts = np.zeros((S, K), dtype=np.int64)
    filled = np.zeros(S, dtype=np.int64)
    placed = np.zeros(K, dtype=np.int64)
    wk = np.empty(K, dtype=np.float64)
    ws = np.empty(S, dtype=np.float64)
    u_idx = 0
    for _i in range(n_total):
        total = 0.0
        for k2 in range(K):
            if placed[k2] < budgets[k2]:
                wk[k2] = theta[k2]
            else:
                wk[k2] = 0.0
            total += wk[k2]
        target = uniforms[u_idx] * total
        u_idx += 1
        if total <= 0.0:
            k = -1
        else:
            k = _pick(wk, K, target)
        if k < 0 or placed[k] >= budgets[k]:
            k = _first_open(budgets, placed, K)
        total2 = 0.0
        denom = placed[k] + pseudo * S
        for s in range(S):
            if filled[s] < capacities[s]:
                frac = (counts[s, k] + pseudo) / denom
                ws[s] = eta[k] * frac + (1.0 - eta[k]) / S
            else:
                ws[s] = 0.0
            total2 += ws[s]
        t2 = uniforms[u_idx] * total2
        u_idx += 1
        if total2 <= 0.0:
            s_pick = -1
        else:
            s_pick = _pick(ws, S, t2)
        if s_pick < 0 or filled[s_pick] >= capacities[s_pick]:
            s_pick = _first_open(capacities, filled, S)
        counts[s_pick, k] += 1
        placed[k] += 1
        filled[s_pick] += 1
    return counts
