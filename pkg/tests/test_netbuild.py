from __future__ import annotations

import io
import math
from datetime import date

import numpy as np
import pytest
from hypothesis import given, strategies as st

from netlab.errors import EmptyNetworkError, ParseError
from netlab.ingest import BankId, DirectedTrade, Side
from netlab.netbuild import (build_networks, build_year_network, edge_observations, load_network,
                             save_network)

A, B, C = (BankId("IT", i) for i in (1, 2, 3))


def trade(lender, borrower, amount, rate=3.0, day=date(2006, 5, 1)):
    return DirectedTrade(lender, borrower, amount, rate, day, Side.BID)


def test_g3_aggregation(g3_trades):
    net = build_year_network(g3_trades, 2006)
    assert net.nodes == (A, B, C)
    assert net.weight(A, B) == 15
    assert net.weight(A, C) == 20
    assert net.weight(B, A) == 5
    assert net.weight(C, B) == 10
    assert net.weight(B, C) == 0
    assert net.trade_count(A, B) == 2
    assert net.rate_sum(A, B) == pytest.approx(2.8 + 2.9)
    assert net.edge(A, B).mean_rate == pytest.approx(2.85)
    assert net.arc_count == 4


def test_singleton_network():
    net = build_year_network([trade(A, B, 7.0)], 2006)
    assert net.n == 2 and net.arc_count == 1 and net.weight(A, B) == 7.0


def test_other_year_is_empty():
    with pytest.raises(EmptyNetworkError, match="empty network"):
        build_year_network([trade(A, B, 7.0)], 2007)


def test_year_window_uses_trade_date():
    trades = [trade(A, B, 1.0, day=date(2006, 12, 31)), trade(B, C, 2.0, day=date(2007, 1, 1))]
    nets = build_networks(trades)
    assert sorted(nets) == [2006, 2007]
    assert nets[2006].nodes == (A, B)
    assert nets[2007].nodes == (B, C)


def test_roundtrip_g3(g3_trades):
    net = build_year_network(g3_trades, 2006)
    buf = io.StringIO()
    save_network(net, buf)
    text = buf.getvalue()
    assert text.count("\n") == 5
    assert load_network(io.StringIO(text)) == net


HEAD = "year,lender,borrower,weight,trade_count,rate_sum\n"


@pytest.mark.parametrize("body, match", [
    ("2006,IT0001,IT0001,5,1,3\n", "self-loop"),
    ("2006,IT0001,IT0002,0,1,3\n", "weight"),
    ("2006,IT0001,IT0002,5,0,3\n", "trade_count"),
    ("2006,IT0001,IT0002,5,1,3\n2007,IT0002,IT0001,5,1,3\n", "mixed years"),
    ("2006,IT0001,IT0002,5,1,3\n2006,IT0001,IT0002,5,1,3\n", "duplicate"),
    ("2006,IT0001,IT0002,five,1,3\n", "line 2"),
    ("2006,IT0001,IT0002,5,1\n", "expected 6"),
])
def test_malformed_edge_lists(body, match):
    with pytest.raises(ParseError, match=match):
        load_network(io.StringIO(HEAD + body))


def test_empty_body():
    with pytest.raises(EmptyNetworkError, match="empty network"):
        load_network(io.StringIO(HEAD))


def test_edge_error_carries_line():
    with pytest.raises(ParseError) as err:
        load_network(io.StringIO(HEAD + "2006,IT0001,IT0002,5,1,3\n2006,IT0002,IT0002,1,1,1\n"))
    assert err.value.line == 3


def test_observations_match_counts(g3_trades):
    net = build_year_network(g3_trades, 2006)
    obs = edge_observations(g3_trades, 2006)
    for e in net.edges:
        got = obs[(e.lender, e.borrower)]
        assert len(got) == e.trade_count
        assert math.fsum(o.amount for o in got) == e.weight


def test_scaled_network(g3_trades):
    net = build_year_network(g3_trades, 2006)
    big = net.scaled(1000)
    assert big.weight(A, B) == 15000
    assert big.nodes == net.nodes


def test_arrays_read_only(g3_trades):
    net = build_year_network(g3_trades, 2006)
    with pytest.raises(ValueError):
        net.weights[0] = 1.0


banks = st.sampled_from([BankId("IT", i) for i in range(1, 7)])
trades_st = st.lists(
    st.tuples(banks, banks, st.floats(0.05, 500, allow_nan=False), st.floats(0, 6, allow_nan=False))
    .filter(lambda r: r[0] != r[1]),
    min_size=1, max_size=40,
).map(lambda rows: [trade(a, b, m, r) for a, b, m, r in rows])


@given(trades_st, st.randoms(use_true_random=False))
def test_order_independent(trades, rnd):
    shuffled = list(trades)
    rnd.shuffle(shuffled)
    assert build_year_network(trades, 2006) == build_year_network(shuffled, 2006)


@given(trades_st)
def test_conservation_and_rate_bounds(trades):
    net = build_year_network(trades, 2006)
    assert net.total_volume() == pytest.approx(math.fsum(t.amount for t in trades), rel=1e-12)
    assert set(net.nodes) == {t.lender for t in trades} | {t.borrower for t in trades}
    for e in net.edges:
        rates = [t.rate for t in trades if (t.lender, t.borrower) == (e.lender, e.borrower)]
        assert min(rates) - 1e-12 <= e.mean_rate <= max(rates) + 1e-12
    w = net.adjacency()
    assert np.all(np.diag(w) == 0)
    assert np.array_equal(w > 0, net.adjacency() > 0)


@given(trades_st)
def test_save_load_roundtrip(trades):
    net = build_year_network(trades, 2006)
    buf = io.StringIO()
    save_network(net, buf)
    assert load_network(io.StringIO(buf.getvalue())) == net
