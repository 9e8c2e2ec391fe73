"""Numba kernels for the exhaustive (theta, beta) minimisation.

The per-pair arithmetic here must stay operation-for-operation identical
to ``bound.discretization_bound`` so that reported minima reproduce exactly.
"""

import numpy as np
from numba import config, njit, prange

# the system TBB is too old for numba; skip it instead of warning on every run
config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

INF = np.inf


@njit(cache=True)
def pair_value(lt, it, lb, ib, G, H, n, cutoff):
    """Bound for one pair; returns a value > cutoff as soon as it is certain.

    lt/lb are theta/beta levels, it/ib their inverse levels, G has G[n] = 0.
    """
    # the (theta - beta^-1)^+ part is an integer count kept apart from the
    # float products, so swapping theta and beta gives bit-identical values
    d_sum = 0
    acc = 0.0
    for i in range(n):
        d = lt[i] - ib[i]
        if d < 0:
            d = 0
        e = lb[i] - it[i]
        if e < 0:
            e = 0
        d_sum += d
        acc += (1.0 - d / n) * H[i] * G[lt[i]] + (1.0 - e / n) * H[i] * G[lb[i]]
        if (d_sum / n + acc) / n > cutoff:
            return (d_sum / n + acc) / n
    return (d_sum / n + acc) / n


@njit(cache=True)
def redundant(lt, ib, st, sb, n):
    if st < sb:
        return True
    for i in range(n):
        if lt[i] < ib[i]:
            return True
    return False


@njit(parallel=True, cache=True)
def minimise(levels, inv, sums, G, H, seed_bound, chunk_bounds, prune):
    """Chunked min over all pairs; chunks are contiguous ranges of theta.

    Returns per-chunk (value, theta index, beta index, evaluated, pruned).
    A shared best-so-far array is read and written without locking: it only
    ever holds values of real pairs, so stale reads just prune less.
    """
    m, n = levels.shape
    nchunks = chunk_bounds.shape[0] - 1
    out_val = np.full(nchunks, INF)
    out_t = np.full(nchunks, -1, dtype=np.int64)
    out_b = np.full(nchunks, -1, dtype=np.int64)
    out_eval = np.zeros(nchunks, dtype=np.int64)
    out_pruned = np.zeros(nchunks, dtype=np.int64)
    shared = np.full(1, seed_bound)
    for c in prange(nchunks):
        best = seed_bound
        bt = -1
        bb = -1
        ev = 0
        pr = 0
        for t in range(chunk_bounds[c], chunk_bounds[c + 1]):
            lt = levels[t]
            it = inv[t]
            for b in range(m):
                if prune and redundant(lt, inv[b], sums[t], sums[b], n):
                    pr += 1
                    continue
                ev += 1
                cutoff = best
                if shared[0] < cutoff:
                    cutoff = shared[0]
                v = pair_value(lt, it, levels[b], inv[b], G, H, n, cutoff)
                if v < best:
                    best = v
                    bt = t
                    bb = b
                    if v < shared[0]:
                        shared[0] = v
        out_val[c] = best if bt >= 0 else INF
        out_t[c] = bt
        out_b[c] = bb
        out_eval[c] = ev
        out_pruned[c] = pr
    return out_val, out_t, out_b, out_eval, out_pruned


@njit(cache=True)
def _collect_chunk(levels, inv, sums, G, H, threshold, prune, t0, t1, ts, bs, fill):
    m, n = levels.shape
    k = 0
    for t in range(t0, t1):
        for b in range(m):
            if prune and redundant(levels[t], inv[b], sums[t], sums[b], n):
                continue
            v = pair_value(levels[t], inv[t], levels[b], inv[b], G, H, n, threshold)
            if v <= threshold:
                if fill:
                    ts[k] = t
                    bs[k] = b
                k += 1
    return k


def collect_below(levels, inv, sums, G, H, threshold, prune=True):
    """Indices of all (theta, beta) pairs whose bound is <= threshold."""
    m = levels.shape[0]
    dummy = np.zeros(0, dtype=np.int64)
    k = _collect_chunk(levels, inv, sums, G, H, threshold, prune, 0, m, dummy, dummy, False)
    ts = np.empty(k, dtype=np.int64)
    bs = np.empty(k, dtype=np.int64)
    _collect_chunk(levels, inv, sums, G, H, threshold, prune, 0, m, ts, bs, True)
    return ts, bs
