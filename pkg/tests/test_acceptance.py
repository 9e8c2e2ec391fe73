"""Acceptance criteria, one ``test_criterion_<k>_*`` group per criterion.

conftest prints a PASS/FAIL line per criterion at the end of the session.
"""

import inspect
import time
from fractions import Fraction

import numpy as np
import pytest

from obliq import analytic, bound, hardness, ranking
from obliq.data import FIGURE_GH, FIGURE_RATIO, figure_gh
from obliq.opt import phi_sweep
from obliq.stepfn import GeneralFormParams, GridStep, general_form

from invariants import PROPERTIES


# 1. certified ratios of the published coordinates --------------------------------

@pytest.mark.parametrize("n", [4, 5, 6, 7])
def test_criterion_1_figure_ratio(n, jit_warm):
    gh = figure_gh(n)
    t0 = time.perf_counter()
    rep = bound.verify_ratio(gh, workers=1 if n <= 6 else 8)
    elapsed = time.perf_counter() - t0
    print(f"n={n}: certified {rep.ratio:.6f}, published {FIGURE_RATIO[n]}, {elapsed:.2f}s")
    assert elapsed <= (5.0 if n <= 6 else 300.0)
    assert abs(rep.ratio - FIGURE_RATIO[n]) <= 2e-3


# 2. main result ------------------------------------------------------------------

@pytest.mark.longrun
def test_criterion_2_thirteen_segments():
    rep = bound.verify_ratio(figure_gh(13))
    print(f"n=13: certified {rep.ratio:.6f} in {rep.wall_time:.0f}s")
    assert abs(rep.ratio - 0.6590) <= 5e-4


def test_criterion_2_nine_segment_sweep(jit_warm):
    G9 = [g for g, _ in FIGURE_GH[9]]
    t0 = time.perf_counter()
    res = phi_sweep(G9, np.linspace(0.58, 0.62, 5), workers=8)
    elapsed = time.perf_counter() - t0
    print(f"n=9 sweep: best phi {res.best_phi:.3f} certified {res.ratio:.6f}, {elapsed:.0f}s; "
          + ", ".join(f"{p:.3f}->{r:.5f}" for p, r in res.points))
    assert res.ratio >= 0.650
    assert elapsed <= 1800


# 3. hardness values ------------------------------------------------------------------

EXACT = {"warmup": Fraction(7, 8), "h3": Fraction(89, 108), "hhat2": Fraction(19, 24),
         "hhat3": Fraction(91, 120)}


@pytest.mark.parametrize("name", list(EXACT))
def test_criterion_3_exact(name):
    t0 = time.perf_counter()
    res = hardness.optimal_adaptive_value(hardness.HardFamily.parse(name))
    elapsed = time.perf_counter() - t0
    print(f"{name}: {res.ratio} in {elapsed:.2f}s")
    assert res.ratio == EXACT[name]
    assert elapsed <= 10


@pytest.mark.parametrize("name,value", [("h4", 0.8047), ("h5", 0.7981)])
def test_criterion_3_decimal(name, value):
    t0 = time.perf_counter()
    res = hardness.optimal_adaptive_value(hardness.HardFamily.parse(name))
    elapsed = time.perf_counter() - t0
    print(f"{name}: {res.ratio} = {float(res.ratio):.6f} in {elapsed:.1f}s")
    assert abs(float(res.ratio) - value) <= 5e-5
    assert elapsed <= 600


@pytest.mark.longrun
def test_criterion_3_h6():
    res = hardness.optimal_adaptive_value(hardness.HardFamily.parse("h6"))
    assert abs(float(res.ratio) - 0.7961) <= 5e-5


# 4. Ranking is optimal on the hard instances ---------------------------------------

@pytest.mark.parametrize("name", list(EXACT))
def test_criterion_4_ranking_optimal(name):
    fam = hardness.HardFamily.parse(name)
    assert hardness.ranking_exact_value(fam).expected_matched == \
        hardness.optimal_adaptive_value(fam).expected_matched


# 5. analytic suite ----------------------------------------------------------------

def test_criterion_5_analytic():
    t0 = time.perf_counter()
    params = analytic.AnalyticParams()
    ev = analytic.AnalyticEvaluation(params)
    cond = analytic.check_condition(params)
    m = ev.minimize(1e-3)
    elapsed = time.perf_counter() - t0
    print(f"condition {cond.value:.7f}, G(1) {ev.anti.G(1.0):.6f}, H(1) {ev.anti.H(1.0):.6f}, "
          f"tau* {ev.tau_star():.5f}, min bound {m.certified:.6f} at ({m.tau}, {m.gamma}), {elapsed:.1f}s")
    assert cond.value < 1 and abs(cond.value - 0.999992) <= 1e-5
    assert abs(ev.anti.G(1.0) - 0.6329) <= 5e-4
    assert abs(ev.anti.H(1.0) - 0.76016) <= 5e-4
    assert abs(ev.tau_star() - 0.2321) <= 1e-3
    assert m.certified >= 0.6324
    assert elapsed <= 60


# 6. oracle equivalences ----------------------------------------------------------

def test_criterion_6_universal_vs_discretized():
    rng = np.random.default_rng(20240601)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 7))
        phi = float(rng.uniform(0, np.pi / 4))
        g = sorted(rng.uniform(0.02, 1.0, n) * np.cos(phi), reverse=True)
        gh = general_form(GeneralFormParams(phi, g))
        t = GridStep(n, sorted(rng.integers(0, n + 1, n)))
        b = GridStep(n, sorted(rng.integers(0, n + 1, n)))
        diff = abs(analytic.universal_bound_numeric(gh.g, gh.h, t, b) - bound.discretization_bound(gh, t, b))
        worst = max(worst, diff)
    print(f"max difference over 100 step inputs: {worst:.2e}")
    assert worst <= 1e-6


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_criterion_6_pruning_exact(n, jit_warm):
    rng = np.random.default_rng(n)
    ghs = [figure_gh(4)] if n == 4 else []
    for _ in range(5):
        phi = float(rng.uniform(0, np.pi / 4))
        ghs.append(general_form(GeneralFormParams(phi, sorted(rng.uniform(0.05, 1.0, n) * np.cos(phi),
                                                              reverse=True))))
    for gh in ghs:
        pruned = bound.verify_ratio(gh, prune=True).ratio
        assert pruned == bound.verify_ratio(gh, prune=False).ratio
        assert pruned == bound.brute_force_ratio(gh, prune=False)[0]


@pytest.mark.parametrize("name", ["warmup", "h3"])
def test_criterion_6_canonical_exact(name):
    fam = hardness.HardFamily.parse(name)
    assert hardness.optimal_adaptive_value(fam, canonical=True).expected_matched == \
        hardness.optimal_adaptive_value(fam, canonical=False).expected_matched


# 7. structural lemmas --------------------------------------------------------------

def test_criterion_7_structural_lemmas():
    rng = np.random.default_rng(7)
    t0 = time.perf_counter()
    total_checks, violations = 0, []
    for k in range(50):
        nl, nr = int(rng.integers(1, 5)), int(rng.integers(1, 5))
        inst = ranking.random_instance(rng, nl, nr)
        n = int(rng.integers(2, 7))
        phi = float(rng.uniform(0.3, np.pi / 4))
        gh = general_form(GeneralFormParams(phi, sorted(rng.uniform(0.05, 1.0, n) * np.cos(phi),
                                                        reverse=True)))
        rep = ranking.check_structural_lemmas(inst, gh, 4)
        total_checks += sum(rep.checks.values())
        violations += [(k, v) for v in rep.violations]
    elapsed = time.perf_counter() - t0
    print(f"50 instances, {total_checks} checks, {len(violations)} violations, {elapsed:.1f}s")
    assert not violations
    assert elapsed <= 300


# 8. invariant suite ------------------------------------------------------------

_SUITE_START = []


@pytest.mark.parametrize("name", list(PROPERTIES))
def test_criterion_8_invariant(name, tmp_path):
    if not _SUITE_START:
        _SUITE_START.append(time.perf_counter())
    fn = PROPERTIES[name]
    params = inspect.signature(fn).parameters
    fn(tmp_path) if "tmp_path" in params else fn()


def test_criterion_8_suite_time():
    assert _SUITE_START, "invariant suite did not run"
    elapsed = time.perf_counter() - _SUITE_START[0]
    print(f"invariant suite took {elapsed:.0f}s")
    assert elapsed <= 300
