"""Continuous (g, h) with g(y) = a - b exp(min(y, c)), h = sqrt(1 - g^2).

Numerical side of the analytical ratio: the condition that licenses the
two-parameter bound, the bound itself over (tau, gamma), the general
three-integral bound for arbitrary monotone marginal ranks, and the
numeric constants quoted for this particular pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable

import numpy as np

QUAD_TOL = 1e-7


@dataclass(frozen=True)
class AnalyticParams:
    a: float = 1.171
    b: float = 0.339
    c: float = 0.652

    def __post_init__(self):
        if not 0.0 < self.c < 1.0:
            raise ValueError("c must lie in (0, 1)")
        if self.a - self.b * math.exp(self.c) <= 0.0:
            raise ValueError("a - b e^c must be positive")


class ClosedFormGh:
    """Evaluators for g, h and g' with a kink at c."""

    def __init__(self, params: AnalyticParams = AnalyticParams()):
        self.params = params
        a, b, c = params.a, params.b, params.c
        for y in (0.0, c):
            if abs(a - b * math.exp(y)) > 1.0:
                raise ValueError(f"|g| exceeds 1 at y={y}; h is undefined")

    def g(self, y: float) -> float:
        p = self.params
        return p.a - p.b * math.exp(min(y, p.c))

    def h(self, y: float) -> float:
        gy = self.g(y)
        return math.sqrt(max(0.0, 1.0 - gy * gy))

    def g_prime(self, y: float) -> float:
        p = self.params
        return -p.b * math.exp(y) if y <= p.c else 0.0

    @property
    def kinks(self) -> tuple[float, ...]:
        return (self.params.c,)


def closed_form_gh(params: AnalyticParams = AnalyticParams()) -> ClosedFormGh:
    return ClosedFormGh(params)


# --- quadrature -------------------------------------------------------------------

def adaptive_simpson(f: Callable[[float], float], a: float, b: float, tol: float = QUAD_TOL,
                     max_depth: int = 50) -> float:
    """Adaptive Simpson with the usual Richardson correction."""
    if b <= a:
        return 0.0
    fa, fb, m = f(a), f(b), (a + b) / 2
    fm = f(m)
    whole = (b - a) * (fa + 4 * fm + fb) / 6
    return _simpson(f, a, b, fa, fm, fb, whole, tol, max_depth)


def _simpson(f, a, b, fa, fm, fb, whole, tol, depth):
    m = (a + b) / 2
    lm, rm = (a + m) / 2, (m + b) / 2
    flm, frm = f(lm), f(rm)
    left = (m - a) * (fa + 4 * flm + fm) / 6
    right = (b - m) * (fm + 4 * frm + fb) / 6
    delta = left + right - whole
    if depth <= 0 or abs(delta) <= 15 * tol:
        return left + right + delta / 15
    return (_simpson(f, a, m, fa, flm, fm, left, tol / 2, depth - 1)
            + _simpson(f, m, b, fm, frm, fb, right, tol / 2, depth - 1))


def integrate_pieces(f: Callable[[float], float], breaks: Iterable[float], tol: float = QUAD_TOL,
                     lo: float = 0.0, hi: float = 1.0) -> float:
    """Integral over [lo, hi] split at ``breaks``.

    Each piece [p, q) is integrated with its right end pulled one ulp to
    the left, so right-continuous jumps at q never leak into the piece.
    """
    pts = sorted({lo, hi, *(x for x in breaks if lo < x < hi)})
    total = 0.0
    pieces = max(len(pts) - 1, 1)
    for p, q in zip(pts, pts[1:]):
        qm = math.nextafter(q, p)
        total += adaptive_simpson(lambda x, qm=qm: f(min(x, qm)), p, q, tol / pieces)
    return total


@dataclass
class Antiderivatives:
    """G(y) and H(y) (integrals of g, h from 0) with a cached table on a uniform grid."""

    gh: ClosedFormGh
    cells: int = 1000
    _G: np.ndarray = field(init=False, repr=False)
    _H: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        xs = np.linspace(0.0, 1.0, self.cells + 1)
        c = self.gh.params.c
        dg, dh = [0.0], [0.0]
        for p, q in zip(xs, xs[1:]):
            dg.append(self._piece(self.gh.g, p, q, c))
            dh.append(self._piece(self.gh.h, p, q, c))
        self.xs = xs
        self._G = np.cumsum(dg)
        self._H = np.cumsum(dh)
        self._G.setflags(write=False)
        self._H.setflags(write=False)

    def _piece(self, f, p, q, c):
        tol = QUAD_TOL / self.cells
        if p < c < q:
            return adaptive_simpson(f, p, c, tol / 2) + adaptive_simpson(f, c, q, tol / 2)
        return adaptive_simpson(f, p, q, tol)

    def _eval(self, table, f, y: float) -> float:
        if not 0.0 <= y <= 1.0:
            raise ValueError(f"{y} outside [0, 1]")
        k = min(int(y * self.cells), self.cells - 1)
        base = self.xs[k]
        extra = self._piece(f, base, y, self.gh.params.c) if y > base else 0.0
        return float(table[k] + extra)

    def G(self, y: float) -> float:
        return self._eval(self._G, self.gh.g, y)

    def H(self, y: float) -> float:
        return self._eval(self._H, self.gh.h, y)

    @property
    def G_table(self) -> np.ndarray:
        return self._G

    @property
    def H_table(self) -> np.ndarray:
        return self._H


# --- the condition and the two-parameter bound ------------------------------------

@dataclass(frozen=True)
class ConditionResult:
    value: float
    argmax: float

    @property
    def applicable(self) -> bool:
        return self.value < 1.0


def check_condition(params: AnalyticParams = AnalyticParams(), step: float = 1e-4) -> ConditionResult:
    """max over y in [0, 1) of h(1) (g(y) - g'(y)), by grid scan plus golden-section refinement."""
    gh = ClosedFormGh(params)
    h1 = gh.h(1.0)
    f = lambda y: h1 * (gh.g(y) - gh.g_prime(y))
    ys = np.arange(0.0, 1.0, step)
    vals = [f(float(y)) for y in ys]
    k = int(np.argmax(vals))
    lo, hi = max(0.0, ys[k] - step), min(math.nextafter(1.0, 0.0), ys[k] + step)
    y, v = _golden_max(f, lo, hi)
    if vals[k] >= v:
        y, v = float(ys[k]), vals[k]
    return ConditionResult(v, y)


def _golden_max(f, lo, hi, iters=60):
    r = (math.sqrt(5) - 1) / 2
    x1, x2 = hi - r * (hi - lo), lo + r * (hi - lo)
    f1, f2 = f(x1), f(x2)
    for _ in range(iters):
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + r * (hi - lo)
            f2 = f(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - r * (hi - lo)
            f1 = f(x1)
    return (x1, f1) if f1 >= f2 else (x2, f2)


class AnalyticEvaluation:
    """Cached antiderivatives and the (tau, gamma) bounds for one parameter set."""

    def __init__(self, params: AnalyticParams = AnalyticParams(), cells: int = 1000):
        self.params = params
        self.gh = ClosedFormGh(params)
        self.anti = Antiderivatives(self.gh, cells)

    def integrand(self, tau: float, gamma: float, y: float, t: float) -> float:
        """h(y) g(t) + (g(y) - g(tau)) H(t) + g(tau) H(gamma)."""
        g, H = self.gh.g, self.anti.H
        return self.gh.h(y) * g(t) + (g(y) - g(tau)) * H(t) + g(tau) * H(gamma)

    def inner_argmin(self, gamma: float) -> float:
        return min(gamma, self.params.c)

    def lower_bound(self, tau: float, gamma: float) -> float:
        """Two-parameter bound, the y-integral taken by adaptive quadrature."""
        _check_unit(tau, gamma)
        g, H = self.gh.g, self.anti.H
        t = self.inner_argmin(gamma)
        head = (1 - tau) * (1 - gamma) + (1 - tau) * g(tau) * H(gamma)
        Ht, Hg, gtau = H(t), H(gamma), g(tau)
        inner = lambda y: self.gh.h(y) * g(t) + (g(y) - gtau) * Ht + gtau * Hg
        return head + integrate_pieces(inner, [self.params.c], QUAD_TOL, 0.0, tau)

    def lower_bound_closed(self, tau, gamma):
        """Same bound with the y-integral written through G and H; vectorizes over arrays."""
        gv = np.vectorize(self.gh.g)
        G, H = np.vectorize(self.anti.G), np.vectorize(self.anti.H)
        tau, gamma = np.asarray(tau, float), np.asarray(gamma, float)
        t = np.minimum(gamma, self.params.c)
        gtau = gv(tau)
        return ((1 - tau) * (1 - gamma) + (1 - tau) * gtau * H(gamma)
                + gv(t) * H(tau) + (G(tau) - tau * gtau) * H(t) + tau * gtau * H(gamma))

    # relaxed forms used when splitting on gamma <= c and gamma > c
    def relaxed_bound(self, tau: float, gamma: float) -> float:
        """(1 - tau)(1 - gamma) + G(1) H(gamma) + H(tau) g(gamma)."""
        A = self.anti
        return (1 - tau) * (1 - gamma) + A.G(1.0) * A.H(gamma) + A.H(tau) * self.gh.g(gamma)

    def gamma_one_bound(self, tau: float) -> float:
        """g(tau) H(1) + g(c) H(tau) + (G(tau) - tau g(tau)) H(c)."""
        A, g, c = self.anti, self.gh.g, self.params.c
        return g(tau) * A.H(1.0) + g(c) * A.H(tau) + (A.G(tau) - tau * g(tau)) * A.H(c)

    def tau_star(self) -> float:
        """Root of h(tau) = (1 - c) / g(c) on [0, c]."""
        p = self.params
        target = (1 - p.c) / self.gh.g(p.c)
        g_needed = math.sqrt(1.0 - target * target)
        return math.log((p.a - g_needed) / p.b)

    def minimize(self, step: float = 1e-3) -> "BoundMinimum":
        """Grid minimum of the two-parameter bound, refined by golden section near the grid argmin."""
        xs = np.linspace(0.0, 1.0, int(round(1 / step)) + 1)
        cells = self.anti.cells
        if abs(cells * step - round(cells * step)) > 1e-9 or round(cells * step) < 1:
            raise ValueError("grid step must be a multiple of the antiderivative table spacing")
        stride = int(round(cells * step))
        Gt, Ht = self.anti.G_table[::stride], self.anti.H_table[::stride]
        g = np.array([self.gh.g(x) for x in xs])
        c = self.params.c
        tc = np.minimum(xs, c)
        Hc = np.array([self.anti.H(x) for x in tc])
        gc = np.array([self.gh.g(x) for x in tc])
        T, Gm = np.meshgrid(xs, xs, indexing="ij")  # rows tau, cols gamma
        gtau = g[:, None]
        vals = ((1 - T) * (1 - Gm) + (1 - T) * gtau * Ht[None, :]
                + gc[None, :] * Ht[:, None] + (Gt[:, None] - T * gtau) * Hc[None, :]
                + T * gtau * Ht[None, :])
        i, j = np.unravel_index(int(np.argmin(vals)), vals.shape)
        grid_min = float(vals[i, j])
        tau, gamma = float(xs[i]), float(xs[j])
        refined = _refine_2d(lambda a, b: float(self.lower_bound_closed(a, b)), tau, gamma, step)
        return BoundMinimum(grid_min - QUAD_TOL, tau, gamma, min(grid_min, refined[0]), refined[1], refined[2])


@dataclass(frozen=True)
class BoundMinimum:
    certified: float  # grid minimum minus the quadrature tolerance
    tau: float
    gamma: float
    refined: float
    refined_tau: float
    refined_gamma: float


def _refine_2d(f, tau, gamma, step, rounds=4):
    """Alternating golden-section (minimization) in each coordinate within one grid cell."""
    lo_t, hi_t = max(0.0, tau - step), min(1.0, tau + step)
    lo_g, hi_g = max(0.0, gamma - step), min(1.0, gamma + step)
    best = f(tau, gamma)
    for _ in range(rounds):
        tau, v = _golden_max(lambda x: -f(x, gamma), lo_t, hi_t)
        gamma, v = _golden_max(lambda x: -f(tau, x), lo_g, hi_g)
        best = min(best, -v)
    return best, tau, gamma


def _check_unit(*xs):
    for x in xs:
        if not 0.0 <= x <= 1.0:
            raise ValueError(f"{x} outside [0, 1]")


def analytic_lower_bound(params: AnalyticParams, tau: float, gamma: float) -> float:
    ev = AnalyticEvaluation(params)
    if not check_condition(params).applicable:
        raise ValueError("the condition h(1)(g - g') <= 1 fails for these parameters")
    return ev.lower_bound(tau, gamma)


# --- general three-integral bound -------------------------------------------------

def _breaks_of(*fs) -> set[float]:
    out = set()
    for f in fs:
        n = getattr(f, "n", None)
        if n is None and hasattr(f, "f"):
            n = getattr(f.f, "n", None)
        if n:
            out.update(k / n for k in range(1, n))
        out.update(getattr(f, "kinks", ()))
    return out


def _check_monotone(f, name):
    ys = np.linspace(0.0, 1.0, 257)
    vals = [f(float(y)) for y in ys]
    if any(b < a - 1e-15 for a, b in zip(vals, vals[1:])):
        raise ValueError(f"{name} is not non-decreasing")


def universal_bound_numeric(g, h, theta, beta, tol: float = QUAD_TOL) -> float:
    """Sum of the three integrals bounding E[alpha_u + alpha_v] / w_uv for marginal ranks theta, beta.

    ``theta`` and ``beta`` are callables on [0, 1] with an ``inverse()``
    method (``GridStep`` qualifies).  A marginal rank equal to 1 counts
    as g = 0, whatever the continuous formula gives at 1.
    """
    _check_monotone(theta, "theta")
    _check_monotone(beta, "beta")
    th_inv, be_inv = theta.inverse(), beta.inverse()
    g_at = lambda x: 0.0 if x >= 1.0 else g(x)
    breaks = _breaks_of(theta, beta, th_inv, be_inv, g, h)

    def first(y):
        return max(theta(y) - be_inv(y), 0.0)

    def second(y):
        t = theta(y)
        return (1.0 - max(t - be_inv(y), 0.0)) * h(y) * g_at(t)

    def third(y):
        b = beta(y)
        return (1.0 - max(b - th_inv(y), 0.0)) * h(y) * g_at(b)

    return sum(integrate_pieces(f, breaks, tol / 3) for f in (first, second, third))


# --- the quoted constants -----------------------------------------------------------

@dataclass(frozen=True)
class Check:
    name: str
    value: float
    reference: float
    relation: str  # "approx" or ">"
    tol: float
    ok: bool


def reference_checks(params: AnalyticParams = AnalyticParams(), grid: float = 1e-3) -> list[Check]:
    """Recompute every numeric constant of the analytical argument and compare."""
    ev = AnalyticEvaluation(params)
    A, g, h, c = ev.anti, ev.gh.g, ev.gh.h, params.c
    out = []

    def approx(name, value, ref, tol):
        out.append(Check(name, value, ref, "approx", tol, abs(value - ref) <= tol))

    def above(name, value, ref):
        out.append(Check(name, value, ref, ">", 0.0, value > ref))

    cond = check_condition(params)
    approx("condition_max", cond.value, 0.999992, 1e-5)
    out.append(Check("condition_below_one", cond.value, 1.0, "<", 0.0, cond.value < 1.0))
    approx("g(0)", g(0.0), 0.832, 5e-4)
    approx("g(1)", g(1.0), 0.5203, 5e-4)
    approx("G(1)", A.G(1.0), 0.6329, 5e-4)
    approx("H(1)", A.H(1.0), 0.76016, 5e-4)
    ts = ev.tau_star()
    approx("tau_star", ts, 0.2321, 1e-3)
    above("relaxed_bound(tau_star, c)", ev.relaxed_bound(ts, c), 0.634)
    above("relaxed_bound(c, 0)", ev.relaxed_bound(c, 0.0), 0.73)
    above("gamma_one_bound(0)", ev.gamma_one_bound(0.0), 0.63245)
    ys = np.linspace(0.0, 1.0, 1001)
    phis = [ev.gamma_one_bound(float(y)) for y in ys]
    out.append(Check("gamma_one_bound increasing", float(np.min(np.diff(phis))), 0.0, ">", 0.0,
                     bool(np.all(np.diff(phis) > 0))))
    yc = np.linspace(0.0, c, 1001)
    ratio = [ev.gh.g_prime(float(y)) / h(float(y)) for y in yc]
    out.append(Check("g'/h non-increasing on [0, c]", float(np.max(np.diff(ratio))), 0.0, "<=", 0.0,
                     bool(np.all(np.diff(ratio) <= 0))))
    m = ev.minimize(grid)
    out.append(Check("min lower_bound over (tau, gamma)", m.certified, 0.6324, ">=", 0.0, m.certified >= 0.6324))
    return out
