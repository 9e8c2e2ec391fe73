"""Optimizing (G, H) for a fixed segment count.

Every ratio constraint is bilinear: the bound for a fixed (theta, beta) is a
constant plus sum_{i,k} Q[i, k] * H_i * G_k.  The optimizer only ever sees
the active subset of constraints; certification always goes through
``bound.verify_ratio``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import linprog

from .bound import pairs_below, verify_ratio
from .stepfn import GeneralFormParams, GhPair, GridStep, check_budget, enumerate_Sn, general_form

log = logging.getLogger(__name__)

_FLOOR = 1e-6  # keep step values strictly positive
# the model objective and the certified bound sum in different orders
CONVERGENCE_TOL = 1e-9


@dataclass
class QcqpModel:
    n: int
    active_pairs: list[tuple[GridStep, GridStep]] = field(default_factory=list)

    def __post_init__(self):
        self._seen = set()
        pairs, self.active_pairs = self.active_pairs, []
        self.add(pairs)

    def add(self, pairs) -> int:
        """Append pairs not already active; returns how many were new."""
        added = 0
        for t, b in pairs:
            if t.n != self.n or b.n != self.n:
                raise ValueError("active pair has the wrong segment count")
            key = (t.levels, b.levels)
            if key not in self._seen:
                self._seen.add(key)
                self.active_pairs.append((t, b))
                added += 1
        if added:
            self._coef = None
        return added

    def coefficients(self) -> tuple[np.ndarray, np.ndarray]:
        """(const, Q) with value_p = const[p] + sum_{i,k} Q[p,i,k] H_i G_k."""
        if getattr(self, "_coef", None) is None:
            self._coef = _coefficients(self.n, self.active_pairs)
        return self._coef

    def values(self, G, H) -> np.ndarray:
        const, Q = self.coefficients()
        return const + np.einsum("pik,i,k->p", Q, np.asarray(H), np.asarray(G))

    def objective(self, gh: GhPair) -> float:
        if not self.active_pairs:
            return 1.0
        return float(self.values(gh.G, gh.H).min())


def _coefficients(n: int, pairs) -> tuple[np.ndarray, np.ndarray]:
    P = len(pairs)
    LT = np.array([t.levels for t, _ in pairs], dtype=np.int64).reshape(P, n)
    LB = np.array([b.levels for _, b in pairs], dtype=np.int64).reshape(P, n)
    IT = np.array([t.inverse_levels() for t, _ in pairs], dtype=np.int64).reshape(P, n)
    IB = np.array([b.inverse_levels() for _, b in pairs], dtype=np.int64).reshape(P, n)
    d = np.maximum(LT - IB, 0) / n
    e = np.maximum(LB - IT, 0) / n
    const = d.sum(axis=1) / n
    Q = np.zeros((P, n, n + 1))
    p = np.repeat(np.arange(P), n)
    i = np.tile(np.arange(n), P)
    np.add.at(Q, (p, i, LT.ravel()), ((1.0 - d) / n).ravel())
    np.add.at(Q, (p, i, LB.ravel()), ((1.0 - e) / n).ravel())
    # column n multiplies G_{n+1} = 0
    return const, Q[:, :, :n]


def initial_model(n: int) -> QcqpModel:
    """Active set {theta == 1} x S_n; every such pair survives the redundancy test."""
    top = GridStep.constant(n, n)
    return QcqpModel(n, [(top, b) for b in enumerate_Sn(n)])


def full_model(n: int) -> QcqpModel:
    """All non-redundant pairs; only sensible for small n."""
    from .bound import is_redundant
    sn = list(enumerate_Sn(n))
    return QcqpModel(n, [(t, b) for t in sn for b in sn if not is_redundant(t, b)])


def normalize(G, H) -> tuple[np.ndarray, np.ndarray]:
    """Rescale (sG, H/s) so that G1^2 + H1^2 = 1 with G1 >= H1.

    The bound and the budget only see products H_i G_k, so this is a gauge
    choice.  t = s^2 is the larger root of G1^2 t^2 - t + H1^2 = 0.
    """
    G, H = np.asarray(G, float), np.asarray(H, float)
    g1, h1 = G[0], H[0]
    disc = max(0.0, 1.0 - 4.0 * g1 * g1 * h1 * h1)
    t = (1.0 + math.sqrt(disc)) / (2.0 * g1 * g1)
    s = math.sqrt(t)
    return G * s, H / s


def _budget_ok(G, H, eps) -> bool:
    M = np.outer(H, G)
    return float((M + M.T).max()) <= 1.0 + eps


def project(G, H, eps: float = 1e-12) -> GhPair:
    """Feasible point near (G, H): sort into monotone order, floor, shrink into the budget, normalize."""
    G = np.maximum(np.sort(np.asarray(G, float))[::-1], _FLOOR)
    H = np.maximum(np.sort(np.asarray(H, float)), _FLOOR)
    M = np.outer(H, G)
    worst = float((M + M.T).max())
    if worst > 1.0:
        s = math.nextafter(1.0 / math.sqrt(worst), 0.0)
        G, H = G * s, H * s
    G, H = normalize(G, H)
    if not _budget_ok(G, H, eps):
        # normalization rounding; shave one more ulp-scale factor
        G, H = G * (1 - 1e-15), H * (1 - 1e-15)
    gh = GhPair.from_values(G.tolist(), H.tolist())
    if not check_budget(gh).ok:
        raise ArithmeticError("projection failed to reach the budget-feasible set")
    return gh


def _interval(G, H, idx: int) -> tuple[float, float]:
    """Feasible range for one coordinate with every other coordinate fixed."""
    n = len(G)
    if idx < n:
        j = idx
        lo = G[j + 1] if j + 1 < n else _FLOOR
        hi = G[j - 1] if j > 0 else math.inf
        # H_i G_j + H_j G_i <= 1 for every i, and 2 H_j G_j <= 1
        for i in range(n):
            cap = 1.0 / (2.0 * H[j]) if i == j else (1.0 - H[j] * G[i]) / H[i]
            hi = min(hi, cap)
    else:
        j = idx - n
        lo = H[j - 1] if j > 0 else _FLOOR
        hi = H[j + 1] if j + 1 < n else math.inf
        for i in range(n):
            cap = 1.0 / (2.0 * G[j]) if i == j else (1.0 - G[j] * H[i]) / G[i]
            hi = min(hi, cap)
    return lo, hi


def coordinate_ascent(model: QcqpModel, gh: GhPair, step: float = 0.05, min_step: float = 1e-6,
                      trace: list | None = None) -> GhPair:
    """Cyclic +/- step moves per coordinate, clamped to the feasible interval."""
    n = model.n
    const, Q = model.coefficients()
    G, H = np.array(gh.G), np.array(gh.H)
    vals = model.values(G, H)
    best = float(vals.min())
    if trace is not None:
        trace.append(best)
    while step >= min_step:
        moved = False
        for idx in range(2 * n):
            # directional effect of a unit change in this coordinate
            col = Q[:, :, idx] @ H if idx < n else Q[:, idx - n, :] @ G
            x = G[idx] if idx < n else H[idx - n]
            lo, hi = _interval(G, H, idx)
            for delta in (step, -step):
                nx = min(max(x + delta, lo), hi)
                if nx == x:
                    continue
                cand = vals + (nx - x) * col
                v = float(cand.min())
                if v > best:
                    if idx < n:
                        G[idx] = nx
                    else:
                        H[idx - n] = nx
                    G, H = normalize(G, H)
                    vals = model.values(G, H)
                    best = float(vals.min())
                    if trace is not None:
                        trace.append(best)
                    moved = True
                    break
        if not moved:
            step /= 2
    return project(G, H)


def slp_polish(model: QcqpModel, gh: GhPair, radius: float = 0.02, min_radius: float = 1e-7,
               max_iter: int = 200, trace: list | None = None) -> GhPair:
    """Trust-region sequential LP on the max-min objective.

    Each step linearizes all active ratio constraints and the budget
    around the current point; a step is kept only if the exact minimum
    over the active pairs increases after projection.
    """
    n = model.n
    const, Q = model.coefficients()
    cur = gh
    best = model.objective(cur)
    iu, ju = np.triu_indices(n)
    for _ in range(max_iter):
        if radius < min_radius:
            break
        G, H = np.array(cur.G), np.array(cur.H)
        vals = model.values(G, H)
        dG = np.einsum("pik,i->pk", Q, H)
        dH = np.einsum("pik,k->pi", Q, G)
        # variables: F, dG (n), dH (n); maximize F
        P = len(vals)
        A_ratio = np.hstack([np.ones((P, 1)), -dG, -dH])
        b_ratio = vals
        # budget: (H_i+dH_i)(G_j+dG_j) + (H_j+dH_j)(G_i+dG_i) <= 1, linearized
        m = len(iu)
        A_bud = np.zeros((m, 1 + 2 * n))
        for r, (i, j) in enumerate(zip(iu, ju)):
            A_bud[r, 1 + j] += H[i]
            A_bud[r, 1 + i] += H[j]
            A_bud[r, 1 + n + i] += G[j]
            A_bud[r, 1 + n + j] += G[i]
        b_bud = 1.0 - (np.outer(H, G) + np.outer(H, G).T)[iu, ju]
        # monotonicity: G_{i+1}+dG_{i+1} <= G_i+dG_i, H_i+dH_i <= H_{i+1}+dH_{i+1}
        A_mon, b_mon = [], []
        for i in range(n - 1):
            row = np.zeros(1 + 2 * n)
            row[1 + i + 1], row[1 + i] = 1.0, -1.0
            A_mon.append(row)
            b_mon.append(G[i] - G[i + 1])
            row = np.zeros(1 + 2 * n)
            row[1 + n + i], row[1 + n + i + 1] = 1.0, -1.0
            A_mon.append(row)
            b_mon.append(H[i + 1] - H[i])
        A = np.vstack([A_ratio, A_bud] + ([np.array(A_mon)] if A_mon else []))
        b = np.concatenate([b_ratio, b_bud, np.array(b_mon)])
        lo_g = np.maximum(-radius, _FLOOR - G)
        lo_h = np.maximum(-radius, _FLOOR - H)
        bounds = [(None, None)] + [(l, radius) for l in lo_g] + [(l, radius) for l in lo_h]
        c = np.zeros(1 + 2 * n)
        c[0] = -1.0
        res = linprog(c, A_ub=A, b_ub=b, bounds=bounds, method="highs")
        if res.status != 0:
            radius /= 2
            continue
        step = res.x[1:]
        cand = project(G + step[:n], H + step[n:])
        v = model.objective(cand)
        if v > best:
            cur, best = cand, v
            if trace is not None:
                trace.append(best)
            radius = min(radius * 1.5, 0.1)
        else:
            radius /= 2
    return cur


def heuristic_inner_solve(model: QcqpModel, start: GhPair, polish: bool = True,
                          trace: list | None = None) -> GhPair:
    """Coordinate ascent on the active max-min objective, optionally followed by an LP polish.

    The objective recorded in ``trace`` never decreases.
    """
    if start.n != model.n:
        raise ValueError("start has the wrong segment count")
    gh = project(start.G, start.H)
    gh = coordinate_ascent(model, gh, trace=trace)
    if polish:
        gh = slp_polish(model, gh, trace=trace)
        gh = coordinate_ascent(model, gh, step=1e-4, trace=trace)
    return gh


def default_start(n: int) -> GhPair:
    phi = 0.65
    top = math.cos(phi)
    g = [top * (1.0 - 0.8 * i / max(n - 1, 1)) for i in range(n)]
    return general_form(GeneralFormParams(phi, g))


@dataclass(frozen=True)
class SweepResult:
    best_phi: float
    gh: GhPair
    ratio: float
    points: tuple[tuple[float, float], ...]  # (phi, certified ratio)


def phi_sweep(g_values, phis, workers: int | None = None) -> SweepResult:
    """Certify the general form for each angle; g values are capped at cos(phi)."""
    points, best = [], None
    for phi in phis:
        cap = math.cos(phi)
        gh = general_form(GeneralFormParams(phi, [min(v, cap) for v in g_values]))
        r = verify_ratio(gh, workers).ratio
        points.append((float(phi), r))
        if best is None or r > best[2]:
            best = (float(phi), gh, r)
    return SweepResult(best[0], best[1], best[2], tuple(points))


@dataclass(frozen=True)
class CGResult:
    gh: GhPair
    ratio: float
    rounds: int
    converged: bool
    active_pairs: int
    history: tuple[tuple[float, float], ...]  # (claimed, certified) per round


def constraint_generation(n: int, inner: Callable[[QcqpModel, GhPair], GhPair] = heuristic_inner_solve,
                          max_rounds: int = 50, start: GhPair | None = None,
                          workers: int | None = None, model: QcqpModel | None = None) -> CGResult:
    """Alternate inner solves with exhaustive certification, adding pairs violated by at least half the max violation."""
    cand = start if start is not None else default_start(n)
    model = model if model is not None else initial_model(n)
    best_gh, best_ratio = cand, None
    if max_rounds == 0:
        rep = verify_ratio(cand, workers)
        return CGResult(cand, rep.ratio, 0, False, len(model.active_pairs), ())
    history = []
    converged = False
    rounds = 0
    while rounds < max_rounds:
        rounds += 1
        cand = inner(model, cand)
        claimed = model.objective(cand)
        rep = verify_ratio(cand, workers)
        history.append((claimed, rep.ratio))
        if best_ratio is None or rep.ratio > best_ratio:
            best_gh, best_ratio = cand, rep.ratio
        log.info("round %d: claimed %.6f certified %.6f active %d",
                 rounds, claimed, rep.ratio, len(model.active_pairs))
        if rep.ratio >= claimed - CONVERGENCE_TOL:
            converged = True
            break
        threshold = claimed - (claimed - rep.ratio) / 2
        added = model.add(pairs_below(cand, threshold, prune=True))
        if added == 0:
            added = model.add([(rep.argmin_theta, rep.argmin_beta)])
        if added == 0:
            # every violated pair is already active: the inner solve cannot do better
            log.warning("round %d added no pairs; stopping", rounds)
            break
    if not converged:
        log.warning("constraint generation stopped after %d rounds without converging", rounds)
    return CGResult(best_gh, best_ratio, rounds, converged, len(model.active_pairs), tuple(history))


def export_qcqp(model: QcqpModel, path) -> None:
    """Write the model in the plain-text format described in docs/qcqp-format.md."""
    with open(path, "w", newline="\n") as fh:
        fh.write(qcqp_text(model))


def _num(x: float) -> str:
    return format(float(x) + 0.0, ".17g")  # + 0.0 folds -0 into 0


def qcqp_text(model: QcqpModel) -> str:
    n = model.n
    const, Q = model.coefficients() if model.active_pairs else (np.zeros(0), np.zeros((0, n, n)))
    out = ["qcqp 1", f"n {n}", "maximize F",
           "var F 0 1"]
    out += [f"var G{i} 0 inf" for i in range(1, n + 1)]
    out += [f"var H{i} 0 inf" for i in range(1, n + 1)]
    for p, (t, b) in enumerate(model.active_pairs):
        quad = [f"{_num(Q[p, i, k])} H{i + 1} G{k + 1}"
                for i in range(n) for k in range(n) if Q[p, i, k] != 0.0]
        out.append(f"# theta {' '.join(map(str, t.levels))} beta {' '.join(map(str, b.levels))}")
        out.append(_con(f"ratio{p + 1}", ">=", -const[p], ["-1 F"], quad))
    for i in range(1, n + 1):
        for j in range(i, n + 1):
            quad = [f"2 H{i} G{i}"] if i == j else [f"1 H{i} G{j}", f"1 H{j} G{i}"]
            out.append(_con(f"budget{i}_{j}", "<=", 1.0, [], quad))
    for i in range(1, n):
        out.append(_con(f"monoG{i}", ">=", 0.0, [f"1 G{i}", f"-1 G{i + 1}"], []))
    out.append(_con(f"monoG{n}", ">=", 0.0, [f"1 G{n}"], []))
    out.append(_con("monoH1", ">=", 0.0, ["1 H1"], []))
    for i in range(1, n):
        out.append(_con(f"monoH{i + 1}", ">=", 0.0, [f"1 H{i + 1}", f"-1 H{i}"], []))
    out.append(_con("norm", "=", 1.0, [], ["1 G1 G1", "1 H1 H1"]))
    out.append(_con("half", ">=", 0.0, ["1 G1", "-1 H1"], []))
    return "\n".join(out) + "\n"


def _con(name: str, sense: str, rhs: float, lin: list[str], quad: list[str]) -> str:
    parts = [f"con {name} {sense} {_num(rhs)}", f"lin {len(lin)}", *lin, f"quad {len(quad)}", *quad]
    return " ; ".join(parts)
