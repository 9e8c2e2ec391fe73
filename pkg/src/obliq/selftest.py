"""Fast worked examples across all modules; ``obliq selftest`` runs them."""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable

from . import analytic, bound, hardness, opt, ranking, stepfn
from .stepfn import GeneralFormParams, GhPair, GridStep, Monotonicity, StepFunction

TOL = 1e-9


def _close(a, b, tol=TOL):
    return abs(a - b) <= tol


def _stepfn():
    f = StepFunction(2, (0.8, 0.3), Monotonicity.NON_INCREASING, 0.0)
    h = StepFunction(2, (0.2, 0.7), Monotonicity.NON_DECREASING, 0.7)
    fi, hi = f.inverse(), h.inverse()
    yield "step eval", (f(0.0), f(0.5), f(1.0)) == (0.8, 0.3, 0.0)
    yield "inverse of non-increasing", (fi(0.5), fi(0.9), fi(0.1)) == (0.5, 0.0, 1.0)
    yield "inverse of non-decreasing", (hi(0.5), hi(0.8)) == (0.5, 1.0)
    yield "S_n sizes", [len(list(stepfn.enumerate_Sn(n))) for n in (1, 2, 3)] == [2, 6, 20]
    yield "general form circle", _close(stepfn.general_h(0.0, 0.6), 0.8)
    yield "general form tangent", _close(stepfn.general_h(math.pi / 4, 0.3), math.sqrt(2) - 0.3)
    r = math.sqrt(2) / 2
    yield "general form 45 degrees", _close(stepfn.general_h(math.pi / 4, r), r)
    c = stepfn.check_budget(GhPair.from_values((0.8, 0.6), (0.6, 0.8)))
    yield "budget tight pair", c.ok and _close(c.max_violation, 0.0, 1e-12) and c.witness == (1, 2)
    c = stepfn.check_budget(GhPair.from_values((0.9,), (0.9,)))
    yield "budget violated", not c.ok and _close(c.max_violation, 0.62, 1e-12)
    c = stepfn.check_budget(GhPair.from_values((0.5,), (1.0,)))
    yield "budget on boundary", c.ok and _close(c.max_violation, 0.0)


def _bound():
    gh = GhPair.from_values((0.5,), (1.0,))
    one, zero = GridStep(1, (1,)), GridStep(1, (0,))
    yield "bound (1),(1)", _close(bound.discretization_bound(gh, one, one), 1.0)
    yield "bound (1),(0)", _close(bound.discretization_bound(gh, one, zero), 0.5)
    yield "bound (0),(0)", _close(bound.discretization_bound(gh, zero, zero), 1.0)
    rep = bound.verify_ratio(gh)
    yield "verify n=1", _close(rep.ratio, 0.5) and rep.argmin_theta == one and rep.argmin_beta == zero


def _opt():
    res = opt.constraint_generation(1, start=GhPair.from_values((0.3,), (0.954,)))
    r = math.sqrt(2) / 2
    yield "optimize n=1", (_close(res.ratio, 0.5, 1e-6) and _close(res.gh.G[0], r, 1e-5)
                           and _close(res.gh.H[0], r, 1e-5))
    start = opt.default_start(3)
    yield "zero rounds pass through", _close(opt.constraint_generation(3, max_rounds=0, start=start).ratio,
                                             bound.verify_ratio(start).ratio, 0.0)
    m = opt.QcqpModel(1)
    m.add([(GridStep(1, (1,)), GridStep(1, (0,)))])
    text = opt.qcqp_text(m)
    lines = text.splitlines()
    yield "export n=1", (sum(l.startswith("var ") for l in lines) == 3
                         and sum(l.startswith("con ratio") for l in lines) == 1
                         and sum(l.startswith("con budget") for l in lines) == 1
                         and text == opt.qcqp_text(m))
    m2 = opt.QcqpModel(2)
    m2.add([(GridStep(2, (2, 2)), GridStep(2, (0, 0))), (GridStep(2, (1, 2)), GridStep(2, (0, 1)))])
    lines = opt.qcqp_text(m2).splitlines()
    yield "export n=2", (sum(l.startswith("var ") for l in lines) == 5
                         and sum(l.startswith("con ratio") for l in lines) == 2
                         and sum(l.startswith("con budget") for l in lines) == 3)


class _Linear:
    """g(y) = 1 - y with h = 1 - g, enough for ordering examples."""

    def g(self, y):
        return 1.0 - y

    def h(self, y):
        return y


def _ranking():
    inst = ranking.Instance(2, 2, [[3, 2], [2, 3]], [[True, True], [True, True]])
    ranks = ranking.RankAssignment((0.1, 0.3), (0.2, 0.4))
    yield "perturbed order", ranking.perturbed_order(inst, _Linear(), ranks) == [(0, 0), (1, 1), (1, 0), (0, 1)]
    flat = ranking.Instance(2, 2, [[1, 1], [1, 1]], [[True] * 2] * 2)
    same = ranking.RankAssignment((0.5, 0.5), (0.5, 0.5))
    yield "tie break", ranking.perturbed_order(flat, _Linear(), same) == [(0, 0), (0, 1), (1, 0), (1, 1)]
    half = GhPair.from_values((0.5,), (1.0,))
    single = ranking.Instance(1, 1, [[1]], [[True]])
    r = ranking.run(single, half, ranking.RankAssignment((0.2,), (0.7,)))
    yield "single edge duals", _close(r.alpha_left[0], 0.5) and _close(r.alpha_right[0], 0.5)
    missing = ranking.Instance(1, 1, [[1]], [[False]])
    r = ranking.run(missing, half, ranking.RankAssignment((0.2,), (0.7,)))
    yield "single non-edge", r.pairs == () and r.alpha_left == (0.0,) and len(r.trace) == 1
    gh = GhPair.from_values((0.8, 0.6), (0.6, 0.8))
    r = ranking.run(inst, gh, ranks)
    yield "2x2 run", r.pairs == ((0, 0), (1, 1)) and _close(r.total_weight, 6.0)
    yield "offline optimum", (ranking.optimal_offline(single) == 1.0 and ranking.optimal_offline(inst) == 6.0
                              and ranking.optimal_offline(missing) == 0.0)
    mean, se = ranking.estimate_edge_dual(single, half, (0, 0), ranking.RankAssignment((0.0,), (0.0,)), 50, 7)
    yield "single edge estimate", _close(mean, 1.0) and se == 0.0
    yield "lemmas m=1", ranking.check_structural_lemmas(inst, gh, 1).ok
    rnd = ranking.random_instance(ranking._rng(3), 2, 2, p_edge=1.0)
    yield "lemmas 2x2 m=4", ranking.check_structural_lemmas(rnd, gh, 4).ok


def _hardness():
    fam = hardness.HardFamily.warmup()
    post = hardness.posterior(fam, hardness.QueryState.empty(fam))
    yield "warm-up prior", all(p == Fraction(3, 4) for p in post.values())
    fam = hardness.HardFamily.bipartite(3)
    post = hardness.posterior(fam, hardness.QueryState.empty(fam))
    yield "h3 prior", all(p == Fraction(2, 3) for p in post.values())
    yield "warm-up value", hardness.optimal_adaptive_value(hardness.HardFamily.warmup()).ratio == Fraction(7, 8)


def _analytic():
    gh = analytic.closed_form_gh()
    yield "g^2 + h^2 = 1", all(_close(gh.g(y) ** 2 + gh.h(y) ** 2, 1.0, 1e-12) for y in (0.0, 0.3, 0.8, 1.0))
    p = analytic.AnalyticParams(a=0.8, b=0.0)
    yield "condition with b=0", _close(analytic.check_condition(p).value, 0.8 * 0.6, 1e-12)
    yield "condition flag false", not analytic.check_condition(analytic.AnalyticParams(a=1.2)).applicable
    ev = analytic.AnalyticEvaluation()
    yield "tau=0 bound", _close(ev.lower_bound(0.0, 0.4), 0.6 + ev.gh.g(0.0) * ev.anti.H(0.4), 1e-12)
    one = GridStep(4, (4, 4, 4, 4))
    yield "universal bound at rank 1", _close(analytic.universal_bound_numeric(gh.g, gh.h, one, one), 1.0, 1e-7)


SECTIONS: dict[str, Callable] = {
    "stepfn": _stepfn, "bound": _bound, "opt": _opt, "ranking": _ranking,
    "hardness": _hardness, "analytic": _analytic,
}


def run_selftest() -> list[tuple[str, bool]]:
    out = []
    for section, gen in SECTIONS.items():
        for name, ok in gen():
            out.append((f"{section}: {name}", bool(ok)))
    return out
