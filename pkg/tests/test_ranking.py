import math

import numpy as np
import pytest

from obliq import ranking
from obliq.bound import verify_ratio
from obliq.data import figure_gh
from obliq.ranking import Instance, RankAssignment
from obliq.stepfn import GeneralFormParams, GhPair, general_form

SQUARE = Instance(2, 2, [[3, 2], [2, 3]], [[True, True], [True, True]])
SQUARE_RANKS = RankAssignment((0.1, 0.3), (0.2, 0.4))
HALF = GhPair.from_values((0.5,), (1.0,))


class Linear:
    def g(self, y):
        return 1.0 - y

    def h(self, y):
        return y


def test_perturbed_order_example():
    assert ranking.perturbed_order(SQUARE, Linear(), SQUARE_RANKS) == [(0, 0), (1, 1), (1, 0), (0, 1)]


def test_perturbed_order_ties_and_single_pair():
    flat = Instance(2, 2, [[1, 1], [1, 1]], [[True] * 2] * 2)
    same = RankAssignment((0.5, 0.5), (0.5, 0.5))
    assert ranking.perturbed_order(flat, Linear(), same) == [(0, 0), (0, 1), (1, 0), (1, 1)]
    one = Instance(1, 1, [[2.0]], [[True]])
    assert ranking.perturbed_order(one, Linear(), RankAssignment((0.3,), (0.6,))) == [(0, 0)]


def test_zero_weight_pairs_are_never_queried():
    inst = Instance(1, 2, [[0.0, 1.0]], [[True, True]])
    res = ranking.run(inst, HALF, RankAssignment((0.1,), (0.1, 0.9)))
    assert [(u, v) for u, v, _ in res.trace] == [(0, 1)]


def test_single_edge_duals():
    res = ranking.run(Instance(1, 1, [[1]], [[True]]), HALF, RankAssignment((0.2,), (0.7,)))
    assert res.pairs == ((0, 0),)
    assert res.alpha_left == (0.5,) and res.alpha_right == (0.5,)


def test_single_missing_edge():
    res = ranking.run(Instance(1, 1, [[1]], [[False]]), HALF, RankAssignment((0.2,), (0.7,)))
    assert res.pairs == () and res.alpha_left == (0.0,) and res.alpha_right == (0.0,)
    assert len(res.trace) == 1 and res.total_weight == 0.0


def test_square_matching():
    gh = GhPair.from_values((0.8, 0.6), (0.6, 0.8))
    res = ranking.run(SQUARE, gh, SQUARE_RANKS)
    assert res.pairs == ((0, 0), (1, 1))
    assert res.total_weight == 6.0
    assert res.partner_of_left(1) == 1 and res.partner_of_right(0) == 0


def test_removed_vertex_takes_no_part():
    gh = GhPair.from_values((0.8, 0.6), (0.6, 0.8))
    res = ranking.run(SQUARE, gh, SQUARE_RANKS.with_right(0, ranking.REMOVED))
    assert all(v != 0 for _, v, _ in res.trace)
    # (1, 1) outranks (0, 1), so left 0 is left without a partner
    assert res.pairs == ((1, 1),) and res.partner_of_left(0) is None


def test_offline_optimum():
    assert ranking.optimal_offline(Instance(1, 1, [[1]], [[True]])) == 1.0
    assert ranking.optimal_offline(SQUARE) == 6.0
    assert ranking.optimal_offline(Instance(2, 2, [[1, 1], [1, 1]], [[False] * 2] * 2)) == 0.0
    # the diagonal is missing, so only the cross edges remain
    assert ranking.optimal_offline(Instance(2, 2, [[3, 2], [2, 3]], [[False, True], [True, False]])) == 4.0


def test_input_validation():
    with pytest.raises(ValueError):
        Instance(2, 1, [[1.0]], [[True]])
    with pytest.raises(ValueError):
        Instance(1, 1, [[-1.0]], [[True]])
    with pytest.raises(ValueError):
        RankAssignment((1.0,), (0.5,))
    with pytest.raises(ValueError):
        ranking.run(SQUARE, HALF, RankAssignment((0.1,), (0.2,)))
    with pytest.raises(ValueError, match="budget"):
        ranking.run(SQUARE, GhPair.from_values((0.9,), (0.9,)), SQUARE_RANKS)


def test_instance_json_round_trip():
    assert Instance.from_json(SQUARE.to_json()) == SQUARE


def test_estimate_single_edge_exact():
    inst = Instance(1, 1, [[1]], [[True]])
    mean, se = ranking.estimate_edge_dual(inst, figure_gh(4), (0, 0), RankAssignment((0.0,), (0.0,)), 500, 1)
    assert math.isclose(mean, 1.0, abs_tol=1e-12) and se == 0.0


def test_estimate_rejects_non_edge():
    inst = Instance(1, 2, [[1, 1]], [[True, False]])
    with pytest.raises(ValueError):
        ranking.estimate_edge_dual(inst, HALF, (0, 1), RankAssignment((0.0,), (0.0, 0.0)), 10, 1)


def test_path_dual_meets_certified_ratio(jit_warm):
    gh = figure_gh(4)
    certified = verify_ratio(gh).ratio
    path = Instance(1, 2, [[1, 1]], [[True, True]])
    others = ranking.random_ranks(path, 11)
    mean, se = ranking.estimate_edge_dual(path, gh, (0, 0), others, 100_000, 12)
    assert mean >= certified - 3 * se


def test_same_seed_same_report():
    inst = Instance(2, 2, [[1, 2], [2, 1]], [[True, True], [True, False]])
    gh = figure_gh(4)
    assert ranking.instance_report(inst, gh, 300, 9) == ranking.instance_report(inst, gh, 300, 9)
    assert ranking.instance_report(inst, gh, 300, 9) != ranking.instance_report(inst, gh, 300, 10)


def _gh(n=4, phi=0.6):
    g = [math.cos(phi) * (1 - 0.8 * i / max(n - 1, 1)) for i in range(n)]
    return general_form(GeneralFormParams(phi, g))


def test_lemmas_single_grid_point():
    rep = ranking.check_structural_lemmas(SQUARE, _gh(), 1)
    assert rep.ok and rep.tuples_checked == 1


def test_lemmas_two_by_two():
    inst = ranking.random_instance(np.random.default_rng(2), 2, 2, p_edge=1.0)
    rep = ranking.check_structural_lemmas(inst, _gh(), 4)
    assert rep.ok, rep.violations
    assert rep.tuples_checked == 4 ** 4


def test_lemmas_three_by_three():
    inst = ranking.random_instance(np.random.default_rng(3), 3, 3)
    rep = ranking.check_structural_lemmas(inst, _gh(5), 3)
    assert rep.ok, rep.violations
    assert rep.checks["theta_beta_increasing"] > 0


def test_lemma_checker_catches_injected_fault(monkeypatch):
    """Corrupt the full runs so the focal pair is dropped; the checker must notice."""
    original = ranking._GridRuns.run

    def broken(self, removed):
        partner, key, alpha = original(self, removed)
        if removed is None:
            partner, key, alpha = partner.copy(), key.copy(), alpha.copy()
            key[:, 0] = -1.0
            partner[:, 0] = -1
            alpha[:, 0] = 0.0
        return partner, key, alpha

    monkeypatch.setattr(ranking._GridRuns, "run", broken)
    inst = Instance(2, 2, [[1.0, 0.5], [0.7, 1.0]], [[True, True], [True, True]])
    rep = ranking.check_structural_lemmas(inst, _gh(), 3)
    names = {lemma for lemma, _ in rep.violations}
    assert "add_neighbor" in names and "basic_gain" in names


def test_lemma_checker_size_limit():
    big = Instance(6, 5, [[1] * 5] * 6, [[True] * 5] * 6)
    with pytest.raises(ValueError):
        ranking.check_structural_lemmas(big, _gh(), 2)
