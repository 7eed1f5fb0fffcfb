"""Transaction parsing, validation and normalization into lender->borrower flows.

Canonical transaction CSV (UTF-8, header required)::

    date,time,side,aggressor,quoter,rate,amount,maturity

In a ``bid`` trade the aggressor lends to the quoter; in an ``ask`` trade the
aggressor borrows from the quoter.
"""

from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass, field
from datetime import date, time
from enum import Enum
from functools import lru_cache
from pathlib import Path
from typing import IO, Iterable, Sequence

from ._stats import fmt_num
from .errors import ParseError

COLUMNS = ("date", "time", "side", "aggressor", "quoter", "rate", "amount", "maturity")
OVERNIGHT = "ON"

_BANK_RE = re.compile(r"([A-Z]{2})([0-9]{4})")
_TAG_RE = re.compile(r"[A-Za-z0-9]+")
_TIME_RE = re.compile(r"[0-9]{2}:[0-9]{2}:[0-9]{2}")


@dataclass(frozen=True, order=True)
class BankId:
    country: str
    serial: int

    def __post_init__(self):
        if not re.fullmatch(r"[A-Z]{2}", self.country):
            raise ValueError(f"bad country code {self.country!r}")
        if not 0 <= self.serial <= 9999:
            raise ValueError(f"bank serial out of range: {self.serial}")
        object.__setattr__(self, "_hash", hash((self.country, self.serial)))

    # parsed ids are interned, so identity short-circuits most comparisons
    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if other.__class__ is not BankId:
            return NotImplemented
        return self.serial == other.serial and self.country == other.country

    def __hash__(self) -> int:
        return self._hash

    def __str__(self) -> str:
        return f"{self.country}{self.serial:04d}"

    @staticmethod
    def parse(text: str) -> BankId:
        return _parse_bank(text)


@lru_cache(maxsize=65536)
def _parse_bank(text: str) -> BankId:
    m = _BANK_RE.fullmatch(text)
    if m is None:
        raise ValueError(f"bad bank code {text!r}")
    return BankId(m.group(1), int(m.group(2)))


class Side(str, Enum):
    ASK = "ask"
    BID = "bid"


_SIDES = {s.value: s for s in Side}


@lru_cache(maxsize=8192)
def _parse_date(text: str) -> date:
    return date.fromisoformat(text)


@lru_cache(maxsize=131072)
def _parse_time(text: str) -> time:
    if not _TIME_RE.fullmatch(text):
        raise ValueError(text)
    return time.fromisoformat(text)


@dataclass(frozen=True, slots=True)
class TransactionRecord:
    trade_date: date
    trade_time: time | None
    side: Side
    aggressor: BankId
    quoter: BankId
    rate: float
    amount: float
    maturity: str

    def __post_init__(self):
        if not self.amount > 0:
            raise ValueError("amount must be positive")
        if not self.rate >= 0:
            raise ValueError("rate must be non-negative")
        if self.aggressor == self.quoter:
            raise ValueError("self-trade")

    @property
    def is_overnight(self) -> bool:
        return self.maturity == OVERNIGHT


@dataclass(frozen=True, slots=True)
class DirectedTrade:
    lender: BankId
    borrower: BankId
    amount: float
    rate: float
    trade_date: date
    side: Side

    @property
    def year(self) -> int:
        return self.trade_date.year


@dataclass(frozen=True)
class Reject:
    line: int
    field: str | None
    reason: str


@dataclass
class ParseResult:
    records: list[TransactionRecord]
    rows_read: int
    rejects: list[Reject] = field(default_factory=list)

    @property
    def reject_count(self) -> int:
        return len(self.rejects)


def _parse_row(row: Sequence[str], line: int) -> TransactionRecord:
    if len(row) != len(COLUMNS):
        raise ParseError(f"expected {len(COLUMNS)} fields, got {len(row)}", line)
    d, t, side, agg, quo, rate, amount, mat = map(str.strip, row)
    try:
        trade_date = _parse_date(d)
    except ValueError:
        raise ParseError(f"bad date {d!r}", line, "date") from None
    trade_time = None
    if t:
        try:
            trade_time = _parse_time(t)
        except ValueError:
            raise ParseError(f"bad time {t!r}", line, "time") from None
    side_v = _SIDES.get(side.lower())
    if side_v is None:
        raise ParseError(f"unknown side {side!r}", line, "side")
    try:
        aggressor = _parse_bank(agg)
    except ValueError as exc:
        raise ParseError(str(exc), line, "aggressor") from None
    try:
        quoter = _parse_bank(quo)
    except ValueError as exc:
        raise ParseError(str(exc), line, "quoter") from None
    try:
        rate_v = float(rate)
    except ValueError:
        raise ParseError(f"bad rate {rate!r}", line, "rate") from None
    if not math.isfinite(rate_v) or rate_v < 0:
        raise ParseError("rate must be non-negative", line, "rate")
    try:
        amount_v = float(amount)
    except ValueError:
        raise ParseError(f"bad amount {amount!r}", line, "amount") from None
    if not math.isfinite(amount_v) or amount_v <= 0:
        raise ParseError("amount must be positive", line, "amount")
    if mat != OVERNIGHT:
        if not _TAG_RE.fullmatch(mat):
            raise ParseError(f"unknown maturity tag {mat!r}", line, "maturity")
        if mat.upper() == OVERNIGHT:
            mat = OVERNIGHT
    if aggressor == quoter:
        raise ParseError("self-trade", line, "quoter")
    return TransactionRecord(trade_date, trade_time, side_v, aggressor, quoter,
                             rate_v, amount_v, mat)


def parse_transactions(source: IO[bytes] | IO[str], *, strict: bool = True) -> ParseResult:
    """Parse a canonical transaction CSV stream.

    In strict mode the first malformed row raises :class:`ParseError`; in lenient
    mode malformed rows are skipped and recorded in ``ParseResult.rejects``.
    """
    if isinstance(source, io.TextIOBase):
        text = source
    else:
        text = io.TextIOWrapper(source, encoding="utf-8", newline="")
    reader = csv.reader(text)
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("missing header row", 1) from None
    if tuple(h.strip().lower() for h in header) != COLUMNS:
        raise ParseError(f"header must be {','.join(COLUMNS)}", 1)

    records: list[TransactionRecord] = []
    rejects: list[Reject] = []
    rows = 0
    for line, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        rows += 1
        try:
            records.append(_parse_row(row, line))
        except ParseError as exc:
            if strict:
                raise
            rejects.append(Reject(line, exc.field, exc.reason))
    return ParseResult(records, rows, rejects)


def read_transactions(path: str | Path, *, strict: bool = True) -> ParseResult:
    with open(path, "rb") as fh:
        return parse_transactions(fh, strict=strict)


def format_record(rec: TransactionRecord) -> list[str]:
    return [
        rec.trade_date.isoformat(),
        rec.trade_time.isoformat() if rec.trade_time is not None else "",
        rec.side.value,
        str(rec.aggressor),
        str(rec.quoter),
        fmt_num(rec.rate),
        fmt_num(rec.amount),
        rec.maturity,
    ]


def write_transactions(records: Iterable[TransactionRecord], sink: IO[str]) -> int:
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(COLUMNS)
    n = 0
    for rec in records:
        writer.writerow(format_record(rec))
        n += 1
    return n


def filter_overnight(records: Iterable[TransactionRecord]) -> list[TransactionRecord]:
    return [r for r in records if r.maturity == OVERNIGHT]


def to_directed_trade(record: TransactionRecord) -> DirectedTrade:
    if record.aggressor == record.quoter:
        raise ValueError("self-trade")
    if record.side is Side.BID:
        lender, borrower = record.aggressor, record.quoter
    else:
        lender, borrower = record.quoter, record.aggressor
    return DirectedTrade(lender, borrower, record.amount, record.rate,
                         record.trade_date, record.side)


def to_directed_trades(records: Iterable[TransactionRecord]) -> list[DirectedTrade]:
    # same mapping as to_directed_trade; records already exclude self-trades
    bid = Side.BID
    return [DirectedTrade(r.aggressor, r.quoter, r.amount, r.rate, r.trade_date, r.side)
            if r.side is bid else
            DirectedTrade(r.quoter, r.aggressor, r.amount, r.rate, r.trade_date, r.side)
            for r in records]
