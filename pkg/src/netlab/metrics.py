"""Network- and node-level statistics for a :class:`YearNetwork`."""

from __future__ import annotations

import math
import warnings
from collections import defaultdict
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np

from ._stats import Correlation, nearest_rank_index, pearson, sample_std
from .errors import DegenerateNetworkError, EmptyNetworkError
from .ingest import BankId, DirectedTrade, TransactionRecord
from .netbuild import YearNetwork

DEFAULT_ALPHA = 0.5
METRIC_COLUMNS = ("bank", "indegree", "outdegree", "instrength", "outstrength", "gen_in", "gen_out")


@dataclass(frozen=True)
class NodeMetrics:
    bank: BankId
    indegree: int
    outdegree: int
    instrength: float
    outstrength: float
    gen_in: float
    gen_out: float
    alpha: float


@dataclass(frozen=True)
class NetworkSummary:
    year: int
    density: float
    reciprocity: float
    reciprocity_variant: str
    arc_count: int
    node_count: int
    mean_degree: float

    def as_dict(self) -> dict:
        return asdict(self)


def density(net: YearNetwork) -> float:
    n = net.n
    if n < 2:
        raise DegenerateNetworkError("degenerate network")
    return net.arc_count / (n * (n - 1))


def _mutual_arcs(net: YearNetwork) -> int:
    arcs = set(zip(net.src.tolist(), net.dst.tolist()))
    return sum(1 for i, j in arcs if (j, i) in arcs)


def reciprocity(net: YearNetwork, variant: str = "arc") -> float:
    """Share of reciprocated arcs.

    ``variant="arc"`` counts ordered pairs (i, j) with both i->j and j->i and
    divides by the number of arcs. ``variant="dyad"`` instead divides mutual
    dyads by connected dyads (unordered pairs with at least one arc).
    """
    L = net.arc_count
    if L == 0:
        raise EmptyNetworkError("no arcs")
    mutual = _mutual_arcs(net)
    if variant == "arc":
        return mutual / L
    if variant == "dyad":
        m = mutual // 2
        return m / (L - m)
    raise ValueError(f"unknown reciprocity variant {variant!r}")


def generalized_degree(k: np.ndarray, s: np.ndarray, alpha: float) -> np.ndarray:
    """k^(1-alpha) * s^alpha, with 0 wherever the degree is 0."""
    k = np.asarray(k, dtype=float)
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(k)
    pos = k > 0
    out[pos] = k[pos] ** (1.0 - alpha) * s[pos] ** alpha
    return out


def _check_alpha(alpha: float) -> None:
    if alpha < 0 or not math.isfinite(alpha):
        raise ValueError(f"alpha must be a finite non-negative number, got {alpha}")
    if alpha > 1:
        warnings.warn(f"alpha={alpha} > 1 favours tie weights over tie counts", stacklevel=3)


def degree_strength(net: YearNetwork) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(indegree, outdegree, instrength, outstrength) aligned with ``net.nodes``."""
    n = net.n
    k_in = np.bincount(net.dst, minlength=n)
    k_out = np.bincount(net.src, minlength=n)
    s_in = np.bincount(net.dst, weights=net.weights, minlength=n)
    s_out = np.bincount(net.src, weights=net.weights, minlength=n)
    return k_in, k_out, s_in, s_out


def node_metrics(net: YearNetwork, alpha: float = DEFAULT_ALPHA) -> list[NodeMetrics]:
    _check_alpha(alpha)
    if net.n < 2:
        raise DegenerateNetworkError("degenerate network")
    k_in, k_out, s_in, s_out = degree_strength(net)
    g_in = generalized_degree(k_in, s_in, alpha)
    g_out = generalized_degree(k_out, s_out, alpha)
    return [
        NodeMetrics(bank, int(k_in[i]), int(k_out[i]), float(s_in[i]), float(s_out[i]),
                    float(g_in[i]), float(g_out[i]), float(alpha))
        for i, bank in enumerate(net.nodes)
    ]


def network_summary(net: YearNetwork, reciprocity_variant: str = "arc") -> NetworkSummary:
    return NetworkSummary(
        year=net.year,
        density=density(net),
        reciprocity=reciprocity(net, reciprocity_variant),
        reciprocity_variant=reciprocity_variant,
        arc_count=net.arc_count,
        node_count=net.n,
        mean_degree=net.arc_count / net.n,
    )


_CORR_PAIRS = (("degree", "generalized"), ("degree", "strength"), ("generalized", "strength"))


def metric_correlations(metrics: Sequence[NodeMetrics]) -> dict[str, dict[str, Correlation]]:
    """Pearson correlations among degree, generalized degree and strength, per side.

    Returns ``{"in": {"degree~generalized": Correlation, ...}, "out": {...}}``.
    """
    if len(metrics) < 3:
        raise DegenerateNetworkError("correlations need at least 3 nodes")
    cols = {
        "in": {
            "degree": [m.indegree for m in metrics],
            "generalized": [m.gen_in for m in metrics],
            "strength": [m.instrength for m in metrics],
        },
        "out": {
            "degree": [m.outdegree for m in metrics],
            "generalized": [m.gen_out for m in metrics],
            "strength": [m.outstrength for m in metrics],
        },
    }
    return {
        side: {f"{a}~{b}": pearson(v[a], v[b]) for a, b in _CORR_PAIRS}
        for side, v in cols.items()
    }


def ccdf(values: Iterable[float]) -> list[tuple[float, float]]:
    """Empirical P(X >= x) at each distinct value, ascending."""
    arr = np.sort(np.asarray(list(values), dtype=float))
    if arr.size == 0:
        raise ValueError("ccdf of an empty sample")
    uniq, first = np.unique(arr, return_index=True)
    n = arr.size
    return [(float(x), (n - int(i)) / n) for x, i in zip(uniq, first)]


def top_k_concentration(net: YearNetwork, side: str, k: int) -> float:
    """Share of total volume handled by the ``k`` largest lenders (or borrowers)."""
    if k < 1:
        raise ValueError("k must be at least 1")
    _, _, s_in, s_out = degree_strength(net)
    if side == "lend":
        s = s_out
    elif side == "borrow":
        s = s_in
    else:
        raise ValueError(f"side must be 'lend' or 'borrow', got {side!r}")
    total = math.fsum(s)
    if total <= 0:
        raise EmptyNetworkError("zero total volume")
    if k >= net.n:
        return 1.0
    top = np.sort(s)[::-1][:k]
    return math.fsum(top) / total


def activity_share(net: YearNetwork) -> dict[BankId, float]:
    """(s_in + s_out) / (2 * total volume) per bank."""
    _, _, s_in, s_out = degree_strength(net)
    total = net.total_volume()
    return {b: float((s_in[i] + s_out[i]) / (2 * total)) for i, b in enumerate(net.nodes)}


def _describe(values: Sequence[float]) -> dict:
    ordered = sorted(values)
    n = len(ordered)
    return {
        "count": n,
        "total": math.fsum(ordered),
        "mean": math.fsum(ordered) / n,
        "median": ordered[nearest_rank_index(50, n)],
        "std": sample_std(ordered),
        "min": ordered[0],
        "max": ordered[-1],
    }


def market_summary(records: Sequence[TransactionRecord],
                   trades: Sequence[DirectedTrade]) -> dict[int, dict]:
    """Per-year descriptive statistics of the raw records and the overnight trades.

    ``records`` are all parsed rows (any maturity); ``trades`` are the directed
    overnight trades. Bank counts refer to banks active in ``trades``.
    Quantiles use the nearest-rank convention; standard deviations use n-1.
    """
    if not records and not trades:
        raise ValueError("market summary of an empty market")
    rec_by_year: dict[int, list[TransactionRecord]] = defaultdict(list)
    for r in records:
        rec_by_year[r.trade_date.year].append(r)
    tr_by_year: dict[int, list[DirectedTrade]] = defaultdict(list)
    for t in trades:
        tr_by_year[t.trade_date.year].append(t)

    out: dict[int, dict] = {}
    for year in sorted(set(rec_by_year) | set(tr_by_year)):
        recs = rec_by_year.get(year, [])
        trs = tr_by_year.get(year, [])
        n_on = sum(1 for r in recs if r.is_overnight)
        summary: dict = {
            "year": year,
            "n_trades": len(recs),
            "n_on_trades": n_on,
            "on_share": n_on / len(recs) if recs else None,
        }
        if trs:
            lent: dict[BankId, list[float]] = defaultdict(list)
            borrowed: dict[BankId, list[float]] = defaultdict(list)
            for t in trs:
                lent[t.lender].append(t.amount)
                borrowed[t.borrower].append(t.amount)
            banks = set(lent) | set(borrowed)
            lent_tot = [math.fsum(v) for _, v in sorted(lent.items())]
            borr_tot = [math.fsum(v) for _, v in sorted(borrowed.items())]
            rates = _describe([t.rate for t in trs])
            ordered_rates = sorted(t.rate for t in trs)
            rates["q1"] = ordered_rates[nearest_rank_index(25, len(ordered_rates))]
            rates["q3"] = ordered_rates[nearest_rank_index(75, len(ordered_rates))]
            del rates["total"]
            summary.update({
                "n_banks": len(banks),
                "volume": _describe([t.amount for t in trs]),
                "lenders": {
                    "share": len(lent) / len(banks),
                    "mean": math.fsum(lent_tot) / len(lent_tot),
                    "std": sample_std(lent_tot),
                },
                "borrowers": {
                    "share": len(borrowed) / len(banks),
                    "mean": math.fsum(borr_tot) / len(borr_tot),
                    "std": sample_std(borr_tot),
                },
                "rates": rates,
            })
        else:
            summary.update({"n_banks": 0, "volume": None, "lenders": None,
                            "borrowers": None, "rates": None})
        out[year] = summary
    return out
