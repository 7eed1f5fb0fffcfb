"""Rate statistics of key-player groups and tests for above-market pricing.

All functions take the directed overnight trades of a single year together with
that year's classification.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass
from enum import Enum
from typing import IO, Iterable, Sequence

import numpy as np
from scipy import stats as sps

from ._stats import FiveNumber, fmt_num, five_number, pearson, sample_std
from .errors import StatisticalPreconditionError
from .ingest import BankId, DirectedTrade
from .keyplayers import Category, KeyPlayerClassification

MARKET = "market"
SIGNIFICANCE = 0.05
TABLE_ROWS = ("rate", "std", "total_amount", "perc", "n_trades")


class Direction(str, Enum):
    LENDING = "lending"
    BORROWING = "borrowing"


@dataclass(frozen=True)
class GroupRateStats:
    group: str
    direction: Direction
    mean_rate: float | None
    rate_std: float | None
    total_amount: float
    market_share: float
    n_trades: int

    def as_dict(self) -> dict:
        d = asdict(self)
        d["direction"] = self.direction.value
        return d


@dataclass(frozen=True)
class MeanDiffTest:
    statistic: float
    dof: float
    p_value: float
    mean_a: float
    mean_b: float
    n_a: int
    n_b: int

    @property
    def significant_at_5pct(self) -> bool:
        return self.p_value < SIGNIFICANCE

    @property
    def direction_of_difference(self) -> int:
        return int(np.sign(self.mean_a - self.mean_b))

    def as_dict(self) -> dict:
        d = asdict(self)
        d["significant_at_5pct"] = self.significant_at_5pct
        d["direction_of_difference"] = self.direction_of_difference
        return d


def _label(group) -> str:
    if group == MARKET:
        return MARKET
    if isinstance(group, Category):
        return group.value
    if isinstance(group, BankId):
        return str(group)
    return ",".join(sorted(str(b) for b in group))


def _members(group, classification: KeyPlayerClassification | None) -> frozenset[BankId] | None:
    """Bank set selected by ``group``; None means the whole market."""
    if group == MARKET:
        return None
    if isinstance(group, Category):
        if classification is None:
            raise ValueError("a category group needs a classification")
        return classification.members(group)
    if isinstance(group, BankId):
        return frozenset([group])
    return frozenset(group)


class TradeFrame:
    """Column view of one year's directed trades, with banks coded as integers."""

    def __init__(self, trades: Sequence[DirectedTrade]):
        self.banks: list[BankId] = sorted({t.lender for t in trades} | {t.borrower for t in trades})
        code = {b: i for i, b in enumerate(self.banks)}
        self.lender = np.array([code[t.lender] for t in trades], dtype=np.int64)
        self.borrower = np.array([code[t.borrower] for t in trades], dtype=np.int64)
        self.amount = np.array([t.amount for t in trades], dtype=float)
        self.rate = np.array([t.rate for t in trades], dtype=float)
        self.total_amount = math.fsum(t.amount for t in trades)
        self._code = code

    def __len__(self) -> int:
        return self.rate.size

    def codes(self, banks: Iterable[BankId]) -> np.ndarray:
        return np.array(sorted(self._code[b] for b in banks if b in self._code), dtype=np.int64)

    def side(self, direction: Direction) -> np.ndarray:
        return self.lender if direction is Direction.LENDING else self.borrower

    def other_side(self, direction: Direction) -> np.ndarray:
        return self.borrower if direction is Direction.LENDING else self.lender

    def mask(self, banks: Iterable[BankId], direction: Direction) -> np.ndarray:
        return np.isin(self.side(direction), self.codes(banks))

    def category_codes(self, classification: KeyPlayerClassification) -> np.ndarray:
        """Index into ``list(Category)`` for every bank; raises if a bank is unclassified."""
        order = {c: i for i, c in enumerate(Category)}
        out = np.empty(len(self.banks), dtype=np.int64)
        for i, b in enumerate(self.banks):
            if b not in classification.categories:
                raise ValueError(f"bank {b} is not covered by the classification")
            out[i] = order[classification.categories[b]]
        return out


def _frame(trades) -> TradeFrame:
    return trades if isinstance(trades, TradeFrame) else TradeFrame(trades)


def _weighted_mean_std(rates: np.ndarray, amounts: np.ndarray) -> tuple[float, float | None]:
    v1 = amounts.sum()
    mean = float((rates * amounts).sum() / v1)
    if rates.size < 2:
        return mean, None
    v2 = (amounts ** 2).sum()
    var = float((amounts * (rates - mean) ** 2).sum() / (v1 - v2 / v1))
    return mean, math.sqrt(max(var, 0.0))


def group_rate_stats(trades, classification: KeyPlayerClassification | None,
                     group, direction: Direction, weighted: bool = False) -> GroupRateStats:
    """Rate mean/std, volume, market share (percent) and trade count of a group's trades.

    ``trades`` is a list of :class:`DirectedTrade` or a :class:`TradeFrame`.
    ``group`` is a :class:`Category`, a single :class:`BankId`, a collection of
    banks, or :data:`MARKET`. Rates are absent when the group has no trades; the
    standard deviation is absent below two trades.
    """
    direction = Direction(direction)
    frame = _frame(trades)
    if classification is not None and isinstance(group, Category):
        frame.category_codes(classification)
    members = _members(group, classification)
    if members is None:
        sel = np.ones(len(frame), dtype=bool)
    else:
        sel = frame.mask(members, direction)
    rates = frame.rate[sel]
    amounts = frame.amount[sel]
    market_total = frame.total_amount
    total = math.fsum(amounts.tolist())
    mean = std = None
    if rates.size:
        if weighted:
            mean, std = _weighted_mean_std(rates, amounts)
        else:
            mean = float(rates.mean())
            std = sample_std(rates) if rates.size >= 2 else None
    share = 100.0 * total / market_total if market_total > 0 else 0.0
    return GroupRateStats(_label(group), direction, mean, std, total, share, int(rates.size))


def mean_difference_test(sample_a: Sequence[float], sample_b: Sequence[float]) -> MeanDiffTest:
    """Welch's unequal-variance t-test, two-sided, Welch-Satterthwaite dof."""
    a = np.asarray(sample_a, dtype=float)
    b = np.asarray(sample_b, dtype=float)
    if a.size < 2 or b.size < 2:
        raise StatisticalPreconditionError("insufficient variation: need 2+ observations per sample")
    va = a.var(ddof=1) / a.size
    vb = b.var(ddof=1) / b.size
    if va == 0 and vb == 0:
        raise StatisticalPreconditionError("insufficient variation: both samples are constant")
    diff = a.mean() - b.mean()
    se2 = va + vb
    t = diff / math.sqrt(se2)
    dof = se2 ** 2 / (va ** 2 / (a.size - 1) + vb ** 2 / (b.size - 1))
    p = float(2.0 * sps.t.sf(abs(t), dof)) if t != 0 else 1.0
    return MeanDiffTest(float(t), float(dof), min(p, 1.0), float(a.mean()),
                        float(b.mean()), int(a.size), int(b.size))


@dataclass(frozen=True)
class ProviderTest:
    bank: BankId
    n_trades: int
    test: MeanDiffTest | None
    excluded: str | None = None

    @property
    def significantly_higher(self) -> bool:
        return (self.test is not None and self.test.significant_at_5pct
                and self.test.statistic > 0)

    def as_dict(self) -> dict:
        return {
            "bank": str(self.bank),
            "n_trades": self.n_trades,
            "test": None if self.test is None else self.test.as_dict(),
            "excluded": self.excluded,
            "significantly_higher": self.significantly_higher,
        }


def predatory_tests(trades, classification: KeyPlayerClassification,
                    purge: bool = False, min_trades: int = 2) -> list[ProviderTest]:
    """Test each Big provider's lending rates to Losers against the market rate sample.

    The market sample is every trade of the year; ``purge=True`` drops the
    provider's own lending trades from it.
    """
    frame = _frame(trades)
    frame.category_codes(classification)
    big = sorted(classification.members(Category.BIG))
    losers = classification.members(Category.LOSER)
    if not big or not losers:
        raise StatisticalPreconditionError("classification has no Big or no Loser banks")
    to_losers = (np.isin(frame.lender, frame.codes(big))
                 & np.isin(frame.borrower, frame.codes(losers)))
    if not to_losers.any():
        raise StatisticalPreconditionError("no Big -> Loser trades")
    out = []
    for bank in big:
        own = np.isin(frame.lender, frame.codes([bank]))
        sample = frame.rate[own & to_losers]
        if sample.size < min_trades:
            out.append(ProviderTest(bank, int(sample.size), None,
                                    f"fewer than {min_trades} trades to Losers"))
            continue
        ref = frame.rate[~own] if purge else frame.rate
        try:
            test = mean_difference_test(sample, ref)
        except StatisticalPreconditionError as exc:
            out.append(ProviderTest(bank, int(sample.size), None, str(exc)))
            continue
        out.append(ProviderTest(bank, int(sample.size), test))
    return out


def predatory_share(trades, classification: KeyPlayerClassification,
                    purge: bool = False, min_trades: int = 2) -> float:
    """Fraction of eligible Big providers charging Losers significantly above market."""
    return share_from_tests(predatory_tests(trades, classification, purge, min_trades))


def share_from_tests(tests: Sequence[ProviderTest]) -> float:
    eligible = [t for t in tests if t.test is not None]
    if not eligible:
        raise StatisticalPreconditionError("no Big provider has enough trades to Losers")
    return sum(t.significantly_higher for t in eligible) / len(eligible)


def rate_structure_correlations(trades, classification: KeyPlayerClassification,
                                group: Category) -> dict:
    """Per-bank mean lending rate against counterparty count and trade count."""
    frame = _frame(trades)
    codes = frame.codes(classification.members(group))
    active = [c for c in codes if (frame.lender == c).any()]
    if len(active) < 3:
        raise StatisticalPreconditionError(
            f"group {group.value} has {len(active)} banks with lending rates; need 3")
    mean_rate, partners, n_trades = [], [], []
    for c in active:
        own = frame.lender == c
        mean_rate.append(float(frame.rate[own].mean()))
        partners.append(int(np.unique(frame.borrower[own]).size))
        n_trades.append(int(own.sum()))
    return {
        "group": group.value,
        "banks": [str(frame.banks[c]) for c in active],
        "mean_rate": mean_rate,
        "counterparties": partners,
        "trades": n_trades,
        "rate~counterparties": pearson(mean_rate, partners),
        "rate~trades": pearson(mean_rate, n_trades),
    }


def boxplot_data(trades, classification: KeyPlayerClassification,
                 focal: Category, direction: Direction) -> dict[Category, FiveNumber | None]:
    """Five-number rate summaries of the focal group's trades, split by counterparty category."""
    direction = Direction(direction)
    frame = _frame(trades)
    cat = frame.category_codes(classification)
    sel = frame.mask(classification.members(focal), direction)
    other = cat[frame.other_side(direction)[sel]]
    rates = frame.rate[sel]
    out: dict[Category, FiveNumber | None] = {}
    for i, c in enumerate(Category):
        part = rates[other == i]
        out[c] = five_number(part.tolist()) if part.size else None
    return out


def pricing_table(trades, classification: KeyPlayerClassification,
                  group: Category, direction: Direction, weighted: bool = False
                  ) -> list[GroupRateStats]:
    """Market column followed by one column per bank of ``group``."""
    frame = _frame(trades)
    cols = [group_rate_stats(frame, classification, MARKET, direction, weighted)]
    for bank in sorted(classification.members(group)):
        cols.append(group_rate_stats(frame, classification, bank, direction, weighted))
    return cols


def _cell(x) -> str:
    return "" if x is None else fmt_num(x)


def write_pricing_table(columns: Iterable[GroupRateStats], sink: IO[str]) -> None:
    columns = list(columns)
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(["row"] + [c.group for c in columns])
    writer.writerow(["rate"] + [_cell(c.mean_rate) for c in columns])
    writer.writerow(["std"] + [_cell(c.rate_std) for c in columns])
    writer.writerow(["total_amount"] + [_cell(c.total_amount) for c in columns])
    writer.writerow(["perc"] + [_cell(c.market_share) for c in columns])
    writer.writerow(["n_trades"] + [str(c.n_trades) for c in columns])


