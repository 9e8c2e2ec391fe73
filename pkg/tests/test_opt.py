import math

import numpy as np
import pytest

from obliq import bound, opt
from obliq.stepfn import GeneralFormParams, GhPair, GridStep, check_budget, enumerate_Sn, general_form

R = math.sqrt(2) / 2


def test_single_segment_optimum(jit_warm):
    res = opt.constraint_generation(1, start=GhPair.from_values((0.3,), (0.954,)))
    assert res.converged
    assert math.isclose(res.ratio, 0.5, abs_tol=1e-9)
    assert math.isclose(res.gh.G[0], R, abs_tol=1e-6) and math.isclose(res.gh.H[0], R, abs_tol=1e-6)


def test_zero_rounds_pass_through(jit_warm):
    start = opt.default_start(4)
    res = opt.constraint_generation(4, max_rounds=0, start=start)
    assert res.gh == start and res.rounds == 0
    assert res.ratio == bound.verify_ratio(start).ratio


def test_model_values_match_direct_bound():
    rng = np.random.default_rng(0)
    n = 4
    sn = list(enumerate_Sn(n))
    pairs = [(sn[i], sn[j]) for i, j in rng.integers(0, len(sn), (40, 2))]
    model = opt.QcqpModel(n, pairs)
    gh = general_form(GeneralFormParams(0.6, (0.8, 0.6, 0.4, 0.2)))
    direct = [bound.discretization_bound(gh, t, b) for t, b in model.active_pairs]
    assert np.allclose(model.values(gh.G, gh.H), direct, rtol=0, atol=1e-14)


def test_model_rejects_wrong_size_and_dedupes():
    model = opt.QcqpModel(2)
    p = (GridStep(2, (2, 2)), GridStep(2, (0, 1)))
    assert model.add([p, p]) == 1
    with pytest.raises(ValueError):
        model.add([(GridStep(3, (3, 3, 3)), GridStep(3, (0, 0, 0)))])


def test_normalize_is_a_gauge():
    G, H = np.array([0.5, 0.3]), np.array([0.8, 0.9])  # G1 H1 <= 1/2 as the budget requires
    nG, nH = opt.normalize(G, H)
    assert math.isclose(nG[0] ** 2 + nH[0] ** 2, 1.0)
    assert nG[0] >= nH[0]
    assert np.allclose(np.outer(nH, nG), np.outer(H, G))


def test_coordinate_ascent_trace_non_decreasing():
    c = 0.6
    start = GhPair.from_values((c,) * 3, (math.sqrt(1 - c * c),) * 3)
    model = opt.initial_model(3)
    trace = []
    out = opt.coordinate_ascent(model, start, trace=trace)
    assert len(trace) > 1
    assert all(b >= a - 1e-15 for a, b in zip(trace, trace[1:]))
    assert check_budget(out).ok
    assert model.objective(out) >= model.objective(start)


def test_polish_never_lowers_objective():
    model = opt.initial_model(3)
    start = opt.coordinate_ascent(model, opt.default_start(3))
    polished = opt.slp_polish(model, start)
    assert check_budget(polished).ok
    assert model.objective(polished) >= model.objective(start) - 1e-12


def test_five_segments_from_perturbed_figure_point(jit_warm):
    from obliq.data import FIGURE_GH
    rng = np.random.default_rng(5)
    G = np.array([g for g, _ in FIGURE_GH[5]]) + rng.uniform(-0.01, 0.01, 5)
    H = np.array([h for _, h in FIGURE_GH[5]]) + rng.uniform(-0.01, 0.01, 5)
    res = opt.constraint_generation(5, start=opt.project(G, H))
    assert res.converged
    assert res.ratio == bound.verify_ratio(res.gh).ratio
    assert res.ratio >= 0.6385


def test_export_smallest_model(tmp_path):
    model = opt.QcqpModel(1, [(GridStep(1, (1,)), GridStep(1, (0,)))])
    path = tmp_path / "m.qcqp"
    opt.export_qcqp(model, path)
    text = path.read_text()
    lines = text.splitlines()
    assert sum(l.startswith("var ") for l in lines) == 3
    assert sum(l.startswith("con ratio") for l in lines) == 1
    assert sum(l.startswith("con budget") for l in lines) == 1
    assert any(l.startswith("con monoG") for l in lines) and any(l.startswith("con norm") for l in lines)
    opt.export_qcqp(model, tmp_path / "again.qcqp")
    assert (tmp_path / "again.qcqp").read_bytes() == path.read_bytes()


def test_export_two_segments():
    model = opt.QcqpModel(2, [(GridStep(2, (2, 2)), GridStep(2, (0, 0))),
                              (GridStep(2, (1, 2)), GridStep(2, (0, 1)))])
    lines = opt.qcqp_text(model).splitlines()
    assert sum(l.startswith("var ") for l in lines) == 5
    assert sum(l.startswith("con ratio") for l in lines) == 2
    assert sum(l.startswith("con budget") for l in lines) == 3


def test_exported_ratio_rows_evaluate_to_the_bound():
    # parse the text back and evaluate each ratio row at a feasible point
    model = opt.initial_model(3)
    gh = opt.default_start(3)
    env = {f"G{i + 1}": g for i, g in enumerate(gh.G)} | {f"H{i + 1}": h for i, h in enumerate(gh.H)}
    rows = []
    for line in opt.qcqp_text(model).splitlines():
        if not line.startswith("con ratio"):
            continue
        parts = [p.strip() for p in line.split(";")]
        rhs = float(parts[0].split()[3])
        nl = int(parts[1].split()[1])
        quad = parts[3 + nl:]
        val = sum(float(c) * env[a] * env[b] for c, a, b in (q.split() for q in quad))
        rows.append(val - rhs)  # = value of the bound, since the row is -F + quad >= -const
    direct = [bound.discretization_bound(gh, t, b) for t, b in model.active_pairs]
    assert np.allclose(rows, direct, atol=1e-13)


def test_phi_sweep_picks_best(jit_warm):
    res = opt.phi_sweep([0.8, 0.6, 0.4, 0.2], [0.55, 0.65, 0.75])
    assert res.ratio == max(r for _, r in res.points)
    assert res.best_phi in (0.55, 0.65, 0.75)
