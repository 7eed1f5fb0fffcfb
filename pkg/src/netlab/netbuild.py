"""Yearly weighted directed networks built from lender->borrower trades.

The weight of arc i->j is the sum of the amounts of all trades in which i lent
to j during the calendar year (the trade date decides the year).
"""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import IO, Iterable, Mapping

import numpy as np

from ._stats import fmt_num
from .errors import EmptyNetworkError, ParseError
from .ingest import BankId, DirectedTrade

EDGE_COLUMNS = ("year", "lender", "borrower", "weight", "trade_count", "rate_sum")


@dataclass(frozen=True)
class Edge:
    lender: BankId
    borrower: BankId
    weight: float
    trade_count: int
    rate_sum: float

    @property
    def mean_rate(self) -> float:
        return self.rate_sum / self.trade_count


class YearNetwork:
    """Immutable weighted directed graph for one year.

    Nodes are ordered lexicographically by rendered bank code; edges are ordered
    by (lender, borrower). ``src``/``dst``/``weights`` expose the same edges as
    index arrays for vectorized metrics.
    """

    __slots__ = ("year", "nodes", "edges", "_index", "_lookup", "src", "dst",
                 "weights", "counts", "rate_sums")

    def __init__(self, year: int, edges: Iterable[Edge]):
        edges = sorted(edges, key=lambda e: (e.lender, e.borrower))
        if not edges:
            raise EmptyNetworkError(f"empty network for year {year}")
        seen = set()
        for e in edges:
            if e.lender == e.borrower:
                raise ValueError(f"self-loop on {e.lender}")
            if not (e.weight > 0 and e.trade_count > 0):
                raise ValueError(f"edge {e.lender}->{e.borrower} must have positive weight and count")
            key = (e.lender, e.borrower)
            if key in seen:
                raise ValueError(f"duplicate edge {e.lender}->{e.borrower}")
            seen.add(key)
        self.year = int(year)
        self.edges: tuple[Edge, ...] = tuple(edges)
        self.nodes: tuple[BankId, ...] = tuple(sorted({b for e in edges for b in (e.lender, e.borrower)}))
        self._index = {b: i for i, b in enumerate(self.nodes)}
        self._lookup = {(e.lender, e.borrower): e for e in self.edges}
        self.src = np.array([self._index[e.lender] for e in self.edges], dtype=np.int64)
        self.dst = np.array([self._index[e.borrower] for e in self.edges], dtype=np.int64)
        self.weights = np.array([e.weight for e in self.edges], dtype=float)
        self.counts = np.array([e.trade_count for e in self.edges], dtype=np.int64)
        self.rate_sums = np.array([e.rate_sum for e in self.edges], dtype=float)
        for arr in (self.src, self.dst, self.weights, self.counts, self.rate_sums):
            arr.setflags(write=False)

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def arc_count(self) -> int:
        return len(self.edges)

    def index(self, bank: BankId) -> int:
        return self._index[bank]

    def edge(self, lender: BankId, borrower: BankId) -> Edge | None:
        return self._lookup.get((lender, borrower))

    def weight(self, lender: BankId, borrower: BankId) -> float:
        e = self._lookup.get((lender, borrower))
        return 0.0 if e is None else e.weight

    def trade_count(self, lender: BankId, borrower: BankId) -> int:
        e = self._lookup.get((lender, borrower))
        return 0 if e is None else e.trade_count

    def rate_sum(self, lender: BankId, borrower: BankId) -> float:
        e = self._lookup.get((lender, borrower))
        return 0.0 if e is None else e.rate_sum

    def adjacency(self) -> np.ndarray:
        w = np.zeros((self.n, self.n))
        w[self.src, self.dst] = self.weights
        return w

    def total_volume(self) -> float:
        return math.fsum(e.weight for e in self.edges)

    def scaled(self, factor: float) -> YearNetwork:
        """Copy with every weight multiplied by ``factor`` (rates untouched)."""
        if not factor > 0:
            raise ValueError("scale factor must be positive")
        return YearNetwork(self.year, [
            Edge(e.lender, e.borrower, e.weight * factor, e.trade_count, e.rate_sum)
            for e in self.edges
        ])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, YearNetwork):
            return NotImplemented
        return self.year == other.year and self.edges == other.edges

    def __hash__(self) -> int:
        return hash((self.year, self.edges))

    def __repr__(self) -> str:
        return f"YearNetwork(year={self.year}, n={self.n}, arcs={self.arc_count})"


def trade_years(trades: Iterable[DirectedTrade]) -> list[int]:
    return sorted({t.trade_date.year for t in trades})


def build_year_network(trades: Iterable[DirectedTrade], year: int) -> YearNetwork:
    """Aggregate the year's trades into one arc per (lender, borrower) pair.

    Sums use ``math.fsum`` so the result does not depend on trade order.
    """
    groups: dict[tuple[BankId, BankId], tuple[list[float], list[float]]] = {}
    for t in trades:
        if t.trade_date.year != year:
            continue
        key = (t.lender, t.borrower)
        g = groups.get(key)
        if g is None:
            if t.lender == t.borrower:
                raise ValueError("self-trade")
            g = groups[key] = ([], [])
        g[0].append(t.amount)
        g[1].append(t.rate)
    if not groups:
        raise EmptyNetworkError(f"empty network for year {year}")
    edges = [Edge(lender, borrower, math.fsum(a), len(a), math.fsum(r))
             for (lender, borrower), (a, r) in groups.items()]
    return YearNetwork(year, edges)


def build_networks(trades: Iterable[DirectedTrade]) -> dict[int, YearNetwork]:
    trades = list(trades)
    return {y: build_year_network(trades, y) for y in trade_years(trades)}


@dataclass(frozen=True)
class Observation:
    amount: float
    rate: float
    trade_date: date


def edge_observations(trades: Iterable[DirectedTrade], year: int
                      ) -> Mapping[tuple[BankId, BankId], tuple[Observation, ...]]:
    """Per-arc list of the individual trades behind the aggregate, in input order."""
    out: dict[tuple[BankId, BankId], list[Observation]] = defaultdict(list)
    for t in trades:
        if t.trade_date.year == year:
            out[(t.lender, t.borrower)].append(Observation(t.amount, t.rate, t.trade_date))
    return {k: tuple(v) for k, v in sorted(out.items())}


def save_network(net: YearNetwork, sink: IO[str]) -> None:
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(EDGE_COLUMNS)
    for e in net.edges:
        writer.writerow([net.year, str(e.lender), str(e.borrower), fmt_num(e.weight),
                         e.trade_count, fmt_num(e.rate_sum)])


def load_network(source: IO[str]) -> YearNetwork:
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("missing header row", 1) from None
    if tuple(h.strip() for h in header) != EDGE_COLUMNS:
        raise ParseError(f"header must be {','.join(EDGE_COLUMNS)}", 1)
    year = None
    edges = []
    seen = set()
    for line, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(EDGE_COLUMNS):
            raise ParseError(f"expected {len(EDGE_COLUMNS)} fields, got {len(row)}", line)
        try:
            y = int(row[0])
            lender = BankId.parse(row[1].strip())
            borrower = BankId.parse(row[2].strip())
            weight = float(row[3])
            count = int(row[4])
            rate_sum = float(row[5])
        except ValueError as exc:
            raise ParseError(str(exc), line) from None
        if year is None:
            year = y
        elif y != year:
            raise ParseError(f"mixed years {year} and {y}", line, "year")
        if lender == borrower:
            raise ParseError("self-loop", line, "borrower")
        if not (weight > 0 and math.isfinite(weight)):
            raise ParseError("weight must be positive", line, "weight")
        if count < 1:
            raise ParseError("trade_count must be positive", line, "trade_count")
        if (lender, borrower) in seen:
            raise ParseError("duplicate edge", line)
        seen.add((lender, borrower))
        edges.append(Edge(lender, borrower, weight, count, rate_sum))
    if not edges:
        raise EmptyNetworkError("empty network")
    return YearNetwork(year, edges)


def write_network(net: YearNetwork, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        save_network(net, fh)


def read_network(path: str | Path) -> YearNetwork:
    with open(path, encoding="utf-8", newline="") as fh:
        return load_network(fh)
