import itertools
import random
from fractions import Fraction

import pytest

from obliq import hardness
from obliq.hardness import HardFamily, QueryState, Status

WARMUP = HardFamily.warmup()
H3 = HardFamily.bipartite(3)


def test_parse_names():
    assert HardFamily.parse("warmup") == WARMUP
    assert HardFamily.parse("h4") == HardFamily.bipartite(4)
    assert HardFamily.parse("hhat3") == HardFamily.general(3)
    with pytest.raises(ValueError):
        HardFamily.parse("triangle")


def test_edge_counts():
    assert len(WARMUP.edges()) == 3
    assert len(H3.edges()) == 6
    assert len(HardFamily.bipartite(4).edges()) == 10


def test_warmup_prior():
    post = hardness.posterior(WARMUP, QueryState.empty(WARMUP))
    assert len(post) == 4 and set(post.values()) == {Fraction(3, 4)}


def test_h3_prior():
    post = hardness.posterior(H3, QueryState.empty(H3))
    assert len(post) == 9 and set(post.values()) == {Fraction(2, 3)}


def test_posterior_after_a_null_and_a_hit():
    s = QueryState.empty(H3).with_outcome((0, 3), False)
    post = hardness.posterior(H3, s)
    assert (0, 3) not in post
    assert all(0 <= p <= 1 for p in post.values())
    s = s.with_outcome((1, 4), True)
    assert s.matched == frozenset({1, 4})
    assert s.status((4, 1)) is Status.EXISTS
    assert all(1 not in p and 4 not in p for p in hardness.posterior(H3, s))


def test_state_validation():
    s = QueryState.empty(H3).with_outcome((0, 3), True)
    with pytest.raises(ValueError):
        s.with_outcome((0, 3), False)
    with pytest.raises(ValueError):
        s.with_outcome((0, 4), True)  # 0 already matched
    with pytest.raises(ValueError):
        QueryState(H3, frozenset({((0, 1), True)}))  # same side


def test_inconsistent_outcomes():
    s = QueryState.empty(WARMUP)
    for p in WARMUP.candidate_pairs():
        s = s.with_outcome(p, False)
    with pytest.raises(hardness.InconsistentState):
        hardness.posterior(WARMUP, s)


def test_canonical_key_ignores_relabelling():
    rnd = random.Random(1)
    n = 3
    sides = H3.sides()
    outcomes = frozenset({((0, 3), True), ((1, 4), False), ((2, 4), False), ((1, 5), True)})
    base = hardness.canonical_key(outcomes, sides)
    for _ in range(20):
        pl, pr = list(range(n)), list(range(n, 2 * n))
        rnd.shuffle(pl)
        rnd.shuffle(pr)
        perm = pl + pr
        moved = frozenset((tuple(sorted((perm[a], perm[b]))), f) for (a, b), f in outcomes)
        assert hardness.canonical_key(moved, sides) == base


def test_canonical_key_separates_different_states():
    sides = H3.sides()
    a = frozenset({((0, 3), True)})
    b = frozenset({((0, 3), False)})
    c = frozenset({((0, 3), False), ((0, 4), False)})
    d = frozenset({((0, 3), False), ((1, 4), False)})
    keys = {hardness.canonical_key(x, sides) for x in (a, b, c, d)}
    assert len(keys) == 4


def test_warmup_value_and_stats():
    res = hardness.optimal_adaptive_value(WARMUP)
    assert res.expected_matched == Fraction(7, 4) and res.ratio == Fraction(7, 8)
    assert res.stats.embeddings == 4 and res.stats.states > 0


def test_canonical_reduces_states():
    a = hardness.optimal_adaptive_value(H3, canonical=True)
    b = hardness.optimal_adaptive_value(H3, canonical=False)
    assert a.expected_matched == b.expected_matched == Fraction(89, 36)
    assert a.stats.states < b.stats.states


def test_two_ranking_routes_agree():
    for fam in (WARMUP, H3, HardFamily.general(2), HardFamily.general(3), HardFamily.bipartite(4)):
        assert hardness.ranking_exact_value(fam).expected_matched == hardness.ranking_edge_order_value(fam)


def test_ranking_size_limit():
    with pytest.raises(ValueError):
        hardness.ranking_exact_value(HardFamily.bipartite(6))


def test_greedy_by_rank_small():
    # path 0-1-2: rank order 1 first grabs 0 (smallest-rank neighbour), leaving 2 alone
    adj = [{1}, {0, 2}, {1}]
    assert hardness.greedy_by_rank(adj, (1, 0, 2)) == 1
    assert hardness.greedy_by_rank(adj, (0, 1, 2)) == 1
    perfect = [{1}, {0}, {3}, {2}]
    assert all(hardness.greedy_by_rank(perfect, o) == 2 for o in itertools.permutations(range(4)))
