"""Discretized competitive-ratio bound and its exhaustive minimisation."""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels
from .stepfn import GhPair, GridStep, check_budget, count_Sn, enumerate_Sn

# Fixed so that chunking (and hence every reported number) does not depend
# on the worker count.
N_CHUNKS = 256


def _validate(gh: GhPair, theta: GridStep, beta: GridStep) -> None:
    if not gh.n == theta.n == beta.n:
        raise ValueError(f"dimension mismatch: gh n={gh.n}, theta n={theta.n}, beta n={beta.n}")


def discretization_bound(gh: GhPair, theta: GridStep, beta: GridStep) -> float:
    """Lower bound on E[alpha_u + alpha_v] / w_uv for step g, h and marginal ranks theta, beta."""
    _validate(gh, theta, beta)
    n = gh.n
    G = gh.G + (0.0,)
    H = gh.H
    it, ib = theta.inverse_levels(), beta.inverse_levels()
    lt, lb = theta.levels, beta.levels
    # integer part summed exactly; the product sum is commutative per segment,
    # so the value is bit-for-bit symmetric in (theta, beta)
    d_sum = 0
    acc = 0.0
    for i in range(n):
        d = max(lt[i] - ib[i], 0)
        e = max(lb[i] - it[i], 0)
        d_sum += d
        acc += (1.0 - d / n) * H[i] * G[lt[i]] + (1.0 - e / n) * H[i] * G[lb[i]]
    return (d_sum / n + acc) / n


def is_redundant(theta: GridStep, beta: GridStep) -> bool:
    """True if the pair can be skipped w.l.o.g. (sum or inverse condition fails)."""
    if sum(theta.levels) < sum(beta.levels):
        return True
    ib = beta.inverse_levels()
    return any(t < b for t, b in zip(theta.levels, ib))


@dataclass(frozen=True)
class BoundReport:
    ratio: float
    argmin_theta: GridStep
    argmin_beta: GridStep
    pairs_evaluated: int
    pairs_pruned: int
    wall_time: float

    def to_dict(self) -> dict:
        return {
            "ratio": self.ratio,
            "argmin_theta": list(self.argmin_theta.levels),
            "argmin_beta": list(self.argmin_beta.levels),
            "pairs_evaluated": self.pairs_evaluated,
            "pairs_pruned": self.pairs_pruned,
        }


@lru_cache(maxsize=16)
def sn_tables(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Levels, inverse levels and level sums for every element of S_n."""
    m = count_Sn(n)
    levels = np.empty((m, n), dtype=np.int64)
    inv = np.empty((m, n), dtype=np.int64)
    for k, s in enumerate(enumerate_Sn(n)):
        levels[k] = s.levels
    # inverse level at j = #{i : levels[i] <= j}
    for j in range(n):
        inv[:, j] = (levels <= j).sum(axis=1)
    sums = levels.sum(axis=1)
    for a in (levels, inv, sums):
        a.setflags(write=False)
    return levels, inv, sums


def _arrays(gh: GhPair) -> tuple[np.ndarray, np.ndarray]:
    return np.array(gh.G + (0.0,), dtype=np.float64), np.array(gh.H, dtype=np.float64)


def default_workers() -> int:
    return int(os.environ.get("OBLIQ_WORKERS", "1"))


def _set_threads(workers: int | None) -> None:
    import numba
    k = workers if workers is not None else default_workers()
    numba.set_num_threads(max(1, min(k, numba.config.NUMBA_NUM_THREADS)))


def verify_ratio(gh: GhPair, workers: int | None = None, prune: bool = True) -> BoundReport:
    """Minimum of the discretized bound over S_n x S_n, with its witness pair."""
    chk = check_budget(gh)
    if not chk.ok:
        raise ValueError(f"gh violates the budget constraint by {chk.max_violation:g} at {chk.witness}")
    _set_threads(workers)
    t0 = time.perf_counter()
    n = gh.n
    levels, inv, sums = sn_tables(n)
    G, H = _arrays(gh)
    m = levels.shape[0]
    # seed: the theta == 1 row is never redundant, so its minimum is attained
    top = m - 1
    seed = min(_kernels.pair_value(levels[top], inv[top], levels[b], inv[b], G, H, n, np.inf)
               for b in range(m))
    seed = float(np.nextafter(seed, np.inf))
    nchunks = min(N_CHUNKS, m)
    bounds = np.linspace(0, m, nchunks + 1).astype(np.int64)
    vals, ts, bs, ev, pr = _kernels.minimise(levels, inv, sums, G, H, seed, bounds, prune)
    c = int(np.argmin(vals))  # first chunk attaining the minimum
    theta = GridStep(n, tuple(int(x) for x in levels[ts[c]]))
    beta = GridStep(n, tuple(int(x) for x in levels[bs[c]]))
    ratio = discretization_bound(gh, theta, beta)
    return BoundReport(ratio, theta, beta, int(ev.sum()), int(pr.sum()),
                       time.perf_counter() - t0)


def brute_force_ratio(gh: GhPair, prune: bool = False) -> tuple[float, GridStep, GridStep]:
    """Pure-Python minimum over all pairs; reference for small n."""
    best = (math.inf, None, None)
    sn = list(enumerate_Sn(gh.n))
    for t in sn:
        for b in sn:
            if prune and is_redundant(t, b):
                continue
            v = discretization_bound(gh, t, b)
            if v < best[0]:
                best = (v, t, b)
    return best


def pairs_below(gh: GhPair, threshold: float, prune: bool = True) -> list[tuple[GridStep, GridStep]]:
    """All (theta, beta) with bound <= threshold."""
    n = gh.n
    levels, inv, sums = sn_tables(n)
    G, H = _arrays(gh)
    ts, bs = _kernels.collect_below(levels, inv, sums, G, H, float(threshold), prune)
    return [(GridStep(n, tuple(int(x) for x in levels[t])),
             GridStep(n, tuple(int(x) for x in levels[b]))) for t, b in zip(ts, bs)]
