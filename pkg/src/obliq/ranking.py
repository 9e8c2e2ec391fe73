"""Quadratic Ranking on weighted bipartite graphs with hidden edges.

Every vertex draws a rank; pairs are queried in descending order of
g(y_u) g(y_v) w_uv and an existing pair is committed as soon as both
endpoints are free.  Duals give each endpoint its guaranteed gain
h(y_self) g(y_other) w and split the rest equally.

``gh`` arguments are duck-typed: anything with callables ``g`` and ``h``
works (a ``GhPair`` or a continuous pair from ``obliq.analytic``).
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .stepfn import GhPair, check_budget

REMOVED = None  # rank marker for a vertex taken out of the graph
DUAL_TOL = 1e-12


@dataclass(frozen=True)
class Instance:
    left_count: int
    right_count: int
    weights: tuple[tuple[float, ...], ...]
    existence: tuple[tuple[bool, ...], ...]

    def __post_init__(self):
        w = tuple(tuple(float(x) for x in row) for row in self.weights)
        e = tuple(tuple(bool(x) for x in row) for row in self.existence)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "existence", e)
        if self.left_count < 1 or self.right_count < 1:
            raise ValueError("both sides need at least one vertex")
        for m in (w, e):
            if len(m) != self.left_count or any(len(r) != self.right_count for r in m):
                raise ValueError("matrix shape does not match vertex counts")
        if any(not math.isfinite(x) or x < 0 for r in w for x in r):
            raise ValueError("weights must be finite and non-negative")

    @classmethod
    def from_json(cls, text: str) -> "Instance":
        d = json.loads(text)
        return cls(d["left"], d["right"], d["weights"], d["exists"])

    def to_json(self) -> str:
        return json.dumps({"left": self.left_count, "right": self.right_count,
                           "weights": [list(r) for r in self.weights],
                           "exists": [list(r) for r in self.existence]})

    def edges(self) -> list[tuple[int, int]]:
        """Existing pairs with positive weight."""
        return [(u, v) for u in range(self.left_count) for v in range(self.right_count)
                if self.existence[u][v] and self.weights[u][v] > 0]


@dataclass(frozen=True)
class RankAssignment:
    left: tuple[float | None, ...]
    right: tuple[float | None, ...]

    def __post_init__(self):
        for y in itertools.chain(self.left, self.right):
            if y is not REMOVED and not 0.0 <= y < 1.0:
                raise ValueError(f"rank {y!r} outside [0, 1)")

    def with_left(self, u: int, y: float | None) -> "RankAssignment":
        left = list(self.left)
        left[u] = y
        return RankAssignment(tuple(left), self.right)

    def with_right(self, v: int, y: float | None) -> "RankAssignment":
        right = list(self.right)
        right[v] = y
        return RankAssignment(self.left, tuple(right))


class QueryOracle:
    """Reveals existence bits one query at a time and remembers what was asked."""

    def __init__(self, instance: Instance):
        self._exists = instance.existence
        self.accessed: list[tuple[int, int]] = []

    def query(self, u: int, v: int) -> bool:
        self.accessed.append((u, v))
        return self._exists[u][v]


@dataclass(frozen=True)
class MatchResult:
    pairs: tuple[tuple[int, int], ...]
    alpha_left: tuple[float, ...]
    alpha_right: tuple[float, ...]
    trace: tuple[tuple[int, int, bool], ...]
    total_weight: float

    def partner_of_left(self, u: int) -> int | None:
        return next((v for a, v in self.pairs if a == u), None)

    def partner_of_right(self, v: int) -> int | None:
        return next((u for u, b in self.pairs if b == v), None)


def _g_of(gh):
    return gh.g if hasattr(gh, "g") else gh


def perturbed_order(instance: Instance, gh, ranks: RankAssignment) -> list[tuple[int, int]]:
    """Pairs of present vertices by descending g(y_u) g(y_v) w_uv, ties by (u, v).

    Zero-weight pairs are left out: they carry no gain and would only block
    their endpoints.
    """
    g = _g_of(gh)
    gl = [None if y is REMOVED else g(y) for y in ranks.left]
    gr = [None if y is REMOVED else g(y) for y in ranks.right]
    keyed = []
    for u, gu in enumerate(gl):
        if gu is None:
            continue
        for v, gv in enumerate(gr):
            w = instance.weights[u][v]
            if gv is None or w <= 0:
                continue
            keyed.append((-(gu * gv * w), u, v))
    keyed.sort()
    return [(u, v) for _, u, v in keyed]


def _validate_gh(gh) -> None:
    if isinstance(gh, GhPair):
        chk = check_budget(gh)
        if not chk.ok:
            raise ValueError(f"gh violates the budget constraint by {chk.max_violation:g}")


def run(instance: Instance, gh, ranks: RankAssignment, oracle: QueryOracle | None = None) -> MatchResult:
    """One execution for fixed ranks."""
    _validate_gh(gh)
    if len(ranks.left) != instance.left_count or len(ranks.right) != instance.right_count:
        raise ValueError("rank assignment does not match the instance")
    oracle = oracle if oracle is not None else QueryOracle(instance)
    g, h = gh.g, gh.h
    free_l = [y is not REMOVED for y in ranks.left]
    free_r = [y is not REMOVED for y in ranks.right]
    al = [0.0] * instance.left_count
    ar = [0.0] * instance.right_count
    pairs, trace = [], []
    total = 0.0
    for u, v in perturbed_order(instance, gh, ranks):
        if not (free_l[u] and free_r[v]):
            continue
        found = oracle.query(u, v)
        trace.append((u, v, found))
        if not found:
            continue
        free_l[u] = free_r[v] = False
        yu, yv = ranks.left[u], ranks.right[v]
        w = instance.weights[u][v]
        gain_u = h(yu) * g(yv) * w
        gain_v = h(yv) * g(yu) * w
        half = (w - gain_u - gain_v) / 2
        al[u] = gain_u + half
        ar[v] = w - al[u]
        pairs.append((u, v))
        total += w
    return MatchResult(tuple(pairs), tuple(al), tuple(ar), tuple(trace), total)


def optimal_offline(instance: Instance) -> float:
    """Maximum-weight matching over existing pairs (non-edges count as weight 0)."""
    w = np.array(instance.weights) * np.array(instance.existence, dtype=float)
    rows, cols = linear_sum_assignment(w, maximize=True)
    return float(w[rows, cols].sum())


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


RNG_NAME = "numpy.Philox"


def random_ranks(instance: Instance, seed: int) -> RankAssignment:
    y = _rng(seed).random(instance.left_count + instance.right_count)
    return RankAssignment(tuple(y[:instance.left_count].tolist()),
                          tuple(y[instance.left_count:].tolist()))


def estimate_edge_dual(instance: Instance, gh, edge: tuple[int, int], other_ranks: RankAssignment,
                       samples: int, seed: int) -> tuple[float, float]:
    """Monte-Carlo mean and standard error of (alpha_u + alpha_v) / w_uv over uniform y_u, y_v."""
    u, v = edge
    w = instance.weights[u][v]
    if w <= 0:
        raise ValueError("focal pair has zero weight")
    if not instance.existence[u][v]:
        raise ValueError("focal pair is not an edge")
    if samples < 1:
        raise ValueError("need at least one sample")
    _validate_gh(gh)
    draws = _rng(seed).random((samples, 2))
    out = np.empty(samples)
    for k, (yu, yv) in enumerate(draws):
        r = other_ranks.with_left(u, float(yu)).with_right(v, float(yv))
        res = run(instance, gh, r)
        out[k] = (res.alpha_left[u] + res.alpha_right[v]) / w
    mean = float(out.mean())
    stderr = float(out.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    return mean, stderr


def sequential_greedy(instance: Instance, ranks: RankAssignment) -> tuple[tuple[int, int], ...]:
    """Vertices in increasing rank; each free one takes its free neighbour of smallest rank."""
    verts = [(y, 0, i) for i, y in enumerate(ranks.left)] + [(y, 1, j) for j, y in enumerate(ranks.right)]
    verts.sort()
    taken = set()
    pairs = []
    for y, side, i in verts:
        if (side, i) in taken:
            continue
        if side == 0:
            nbrs = [(ranks.right[j], j) for j in range(instance.right_count)
                    if instance.existence[i][j] and (1, j) not in taken]
        else:
            nbrs = [(ranks.left[j], j) for j in range(instance.left_count)
                    if instance.existence[j][i] and (0, j) not in taken]
        if not nbrs:
            continue
        _, j = min(nbrs)
        taken.add((side, i))
        taken.add((1 - side, j))
        pairs.append((i, j) if side == 0 else (j, i))
    return tuple(sorted(pairs))


# --- exhaustive structural checks on a rank grid -----------------------------

@dataclass
class LemmaReport:
    tuples_checked: int
    checks: dict[str, int] = field(default_factory=dict)
    violations: list[tuple[str, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def _record(self, lemma: str, count: int, bad: np.ndarray, what: str) -> None:
        self.checks[lemma] = self.checks.get(lemma, 0) + count
        nbad = int(np.count_nonzero(bad))
        if nbad:
            self.violations.append((lemma, f"{what}: {nbad} grid tuples"))


class _GridRuns:
    """All runs of the algorithm over a product rank grid, vectorized over tuples."""

    def __init__(self, instance: Instance, gh: GhPair, m: int):
        self.inst = instance
        self.nl, self.nr = instance.left_count, instance.right_count
        self.N = self.nl + self.nr
        self.m = m
        delta = 1.0 / (2 * m * gh.n)
        self.grid = np.arange(m) / m + delta
        self.G = np.array(gh.G)
        gvals = np.array([gh.g(y) for y in self.grid])
        hvals = np.array([gh.h(y) for y in self.grid])
        # idx[t, x] = grid position of vertex x in tuple t (C order: last vertex fastest)
        idx = np.indices((m,) * self.N).reshape(self.N, -1).T
        self.idx = idx
        self.gy = gvals[idx]
        self.hy = hvals[idx]
        W = np.array(instance.weights)
        self.pairs = [(u, v) for u in range(self.nl) for v in range(self.nr) if W[u, v] > 0]
        self.W = W

    def run(self, removed: int | None):
        """Partner index (-1 if none), key g(y_partner) w, and dual for every vertex and tuple."""
        T = self.idx.shape[0]
        pl = [(u, v) for u, v in self.pairs if removed not in (u, self.nl + v)]
        N = self.N
        partner = np.full((T, N), -1, dtype=np.int64)
        key = np.full((T, N), -1.0)
        alpha = np.zeros((T, N))
        if not pl:
            return partner, key, alpha
        P = len(pl)
        pw = np.array([self.W[u, v] for u, v in pl])
        pu = np.array([u for u, _ in pl])
        pv = np.array([self.nl + v for _, v in pl])
        ex = np.array([self.inst.existence[u][v] for u, v in pl])
        score = self.gy[:, pu] * self.gy[:, pv] * pw
        # stable sort on -score keeps the (u, v) lexicographic tie-break
        order = np.argsort(-score, axis=1, kind="stable")
        rows = np.arange(T)
        for s in range(P):
            k = order[:, s]
            u, v = pu[k], pv[k]
            ok = ex[k] & (partner[rows, u] < 0) & (partner[rows, v] < 0)
            r = rows[ok]
            u, v, w = u[ok], v[ok], pw[k[ok]]
            partner[r, u] = v
            partner[r, v] = u
            gu, gv = self.gy[r, u], self.gy[r, v]
            key[r, u] = gv * w
            key[r, v] = gu * w
            gain_u = self.hy[r, u] * gv * w
            gain_v = self.hy[r, v] * gu * w
            a_u = gain_u + (w - gain_u - gain_v) / 2
            alpha[r, u] = a_u
            alpha[r, v] = w - a_u
        return partner, key, alpha

    def g_inverse(self, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(g^{-1}(z), g(g^{-1}(z))) for the step g with g(1) = 0."""
        n = len(self.G)
        # first segment k with G_k <= z; G is non-increasing
        k = np.searchsorted(-self.G, -z, side="left")
        pos = np.where(k < n, k / n, 1.0)
        val = np.where(k < n, self.G[np.minimum(k, n - 1)], 0.0)
        return pos, val


def check_structural_lemmas(instance: Instance, gh: GhPair, m: int) -> LemmaReport:
    """Brute-force the preference, monotonicity and gain lemmas over every rank tuple on an m-point grid."""
    _validate_gh(gh)
    if instance.left_count + instance.right_count > 10:
        raise ValueError("grid enumeration is limited to 10 vertices")
    gr = _GridRuns(instance, gh, m)
    N, nl = gr.N, instance.left_count
    T = gr.idx.shape[0]
    report = LemmaReport(T)
    full_p, full_k, full_a = gr.run(None)
    without = {x: gr.run(x) for x in range(N)}
    shape = (m,) * N

    # rank monotonicity for every vertex, with nobody or any single other vertex removed
    for r, (_, key, _) in [(None, (full_p, full_k, full_a))] + list(without.items()):
        for x in range(N):
            if x == r:
                continue
            kx = key[:, x].reshape(shape)
            bad = np.diff(kx, axis=x) > 0
            report._record("rank_monotonicity", bad.size, bad, f"vertex {x}, removed {r}")

    for u, v in instance.edges():
        vv = nl + v
        w = instance.weights[u][v]
        # adding the focal neighbour never hurts either endpoint
        for a, b in ((u, vv), (vv, u)):
            bad = full_k[:, a] < without[b][1][:, a]
            report._record("add_neighbor", T, bad, f"edge ({u},{v}) vertex {a}")
        # marginal ranks from the runs without the other endpoint
        theta, g_theta = gr.g_inverse(np.maximum(without[u][1][:, vv], 0.0) / w)
        beta, g_beta = gr.g_inverse(np.maximum(without[vv][1][:, u], 0.0) / w)
        for name, arr, axis in (("theta", theta, vv), ("beta", beta, u)):
            bad = np.diff(arr.reshape(shape), axis=axis) < 0
            report._record("theta_beta_increasing", bad.size, bad, f"edge ({u},{v}) {name}")
        yu, yv = gr.grid[gr.idx[:, u]], gr.grid[gr.idx[:, vv]]
        hu, hv = gr.hy[:, u], gr.hy[:, vv]
        bad_u = full_a[:, u] < hu * g_beta * w - DUAL_TOL
        bad_v = full_a[:, vv] < hv * g_theta * w - DUAL_TOL
        report._record("basic_gain", 2 * T, bad_u | bad_v, f"edge ({u},{v})")
        cond = (yu < theta) & (yv < beta)
        bad = cond & (full_p[:, u] != vv)
        report._record("extra_gain", int(cond.sum()), bad, f"edge ({u},{v})")
    return report


def random_instance(rng: np.random.Generator, left: int, right: int, p_edge: float = 0.6) -> Instance:
    w = np.round(rng.uniform(0.1, 1.0, (left, right)), 3)
    e = rng.random((left, right)) < p_edge
    return Instance(left, right, w.tolist(), e.tolist())


def instance_report(instance: Instance, gh, samples: int, seed: int) -> dict:
    """Per-edge Monte-Carlo dual estimates plus invariant checks, as plain data."""
    others = random_ranks(instance, seed)
    edges = []
    for k, (u, v) in enumerate(instance.edges()):
        mean, se = estimate_edge_dual(instance, gh, (u, v), others, samples, seed + 1 + k)
        edges.append({"u": u, "v": v, "mean": mean, "stderr": se})
    res = run(instance, gh, others)
    dual_sum = sum(res.alpha_left) + sum(res.alpha_right)
    return {
        "rng": RNG_NAME,
        "edges": edges,
        "sample_run": {"pairs": [list(p) for p in res.pairs], "total_weight": res.total_weight},
        "checks": {
            "dual_accounting": abs(dual_sum - res.total_weight) <= 1e-9,
            "offline_optimum": optimal_offline(instance),
        },
    }
