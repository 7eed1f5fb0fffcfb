from __future__ import annotations

import math
import warnings

import pytest
from hypothesis import given, strategies as st

from netlab._stats import nearest_rank, nearest_rank_index
from netlab.errors import DegenerateNetworkError
from netlab.ingest import BankId
from netlab.keyplayers import (Category, NetScore, categorize, classify, group_persistence,
                               net_scores)
from netlab.metrics import node_metrics
from netlab.netbuild import Edge, YearNetwork, build_year_network

A, B, C = (BankId("IT", i) for i in (1, 2, 3))


@pytest.fixture
def g3_scores(g3_trades):
    return net_scores(node_metrics(build_year_network(g3_trades, 2006), 0.5))


def test_g3_scores_sorted(g3_scores):
    assert [s.bank for s in g3_scores] == [B, C, A]
    by = {s.bank: s.score for s in g3_scores}
    assert by[A] == pytest.approx(math.sqrt(70) - math.sqrt(5), abs=1e-12)
    assert by[B] == pytest.approx(math.sqrt(5) - math.sqrt(50), abs=1e-12)
    assert by[C] == pytest.approx(math.sqrt(10) - math.sqrt(20), abs=1e-12)
    assert by[A] == pytest.approx(6.1305, abs=1e-4)


def test_g3_classification(g3_scores):
    c = classify(g3_scores)
    assert c.t1 == pytest.approx(6.1305, abs=1e-4)
    assert c.t2 == pytest.approx(-4.8350, abs=1e-4)
    assert c.categories == {A: Category.BIG, B: Category.LOSER, C: Category.BORR}
    assert not c.degenerate


def test_balanced_and_one_sided():
    net = YearNetwork(2006, [Edge(A, B, 4.0, 1, 3.0), Edge(B, A, 4.0, 1, 3.0),
                             Edge(C, A, 9.0, 1, 3.0)])
    by = {s.bank: s.score for s in net_scores(node_metrics(net, 0.5))}
    assert by[B] == 0.0
    # C never borrows
    assert by[C] == pytest.approx(3.0)


def test_mixed_alpha_rejected(g3_trades):
    net = build_year_network(g3_trades, 2006)
    mixed = node_metrics(net, 0.5)[:2] + node_metrics(net, 0.2)[2:]
    with pytest.raises(ValueError, match="alpha"):
        net_scores(mixed)


def test_all_zero_is_degenerate_all_big():
    scores = [NetScore(b, 0.0) for b in (A, B, C)]
    with pytest.warns(UserWarning, match="degenerate"):
        c = classify(scores)
    assert c.t1 == c.t2 == 0 and c.degenerate
    assert c.members(Category.BIG) == {A, B, C}


def test_preconditions():
    with pytest.raises(DegenerateNetworkError):
        classify([NetScore(A, 1.0), NetScore(B, -1.0)])
    with pytest.raises(ValueError):
        classify([NetScore(b, float(i)) for i, b in enumerate((A, B, C))], p_hi=5, p_lo=5)


def test_zero_score_is_lender():
    assert categorize(0.0, 5.0, -5.0) is Category.LENDER
    assert categorize(-0.1, 5.0, -5.0) is Category.BORR
    assert categorize(5.0, 5.0, -5.0) is Category.BIG
    assert categorize(-5.0, 5.0, -5.0) is Category.LOSER


def test_nearest_rank_convention():
    assert nearest_rank_index(95, 100) == 94
    assert nearest_rank_index(5, 100) == 4
    assert nearest_rank_index(5, 3) == 0
    assert nearest_rank_index(95, 3) == 2
    assert nearest_rank_index(0, 10) == 0
    assert nearest_rank([3, 1, 2], 50) == 2
    with pytest.raises(ValueError):
        nearest_rank_index(101, 5)


def test_persistence_examples():
    a, b, c, d = (BankId("IT", i) for i in range(1, 5))
    assert group_persistence({a, b, c}, {a, b, d}) == pytest.approx(2 / 3)
    assert group_persistence({a, b}, {a, b}) == 1.0
    assert group_persistence({a}, {b}) == 0.0
    with pytest.raises(ValueError):
        group_persistence(set(), {a})


score_lists = st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=3, max_size=80)


def _scores(values):
    return [NetScore(BankId("IT", i), v) for i, v in enumerate(values)]


@given(score_lists, st.sampled_from([(95, 5), (90, 10), (75, 25)]))
def test_partition_and_threshold_rules(values, ps):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        c = classify(_scores(values), *ps)
    assert c.t2 <= c.t1
    assert sum(len(c.members(cat)) for cat in Category) == len(values)
    for b, s in c.scores.items():
        assert (c.category(b) is Category.BIG) == (s >= c.t1)
        if s < c.t1:
            assert (c.category(b) is Category.LOSER) == (s <= c.t2)


@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=3, max_size=80, unique=True))
def test_big_cardinality_bound(values):
    c = classify(_scores(values))
    n = len(values)
    assert 1 <= len(c.members(Category.BIG)) <= n - math.ceil(0.95 * n) + 1


@given(score_lists, st.integers(-10, 10))
def test_positive_rescaling_preserves_categories(values, e):
    # powers of two keep float products exact, so order and sign are untouched
    k = 2.0 ** e
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        c1 = classify(_scores(values))
        c2 = classify(_scores([v * k for v in values]))
    assert c1.categories == c2.categories
    assert c2.t1 == c1.t1 * k and c2.t2 == c1.t2 * k
