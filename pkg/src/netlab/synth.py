"""Synthetic overnight markets with planted liquidity providers and big borrowers.

The generator is an oracle of our own design, not a model of any real venue.
Trades are produced one at a time:

* the lender of trade t is drawn with probability proportional to
  ``(outstrength + 1) ** attachment_exponent * out_intensity``;
* the borrower likewise from ``(instrength + 1) ** attachment_exponent *
  in_intensity``, excluding the lender;
* the amount is log-normal, rounded to 3 decimals (at least 0.001);
* the rate is ``base_rate + rate_noise_sd * z`` plus ``provider_markup`` on
  provider -> loser trades, floored at 0 and rounded to 4 decimals;
* the side is ask or bid with equal probability, and aggressor/quoter are set
  so that the trade maps back to the sampled lender and borrower.

Planted providers carry ``provider_out_intensity``, planted losers carry
``loser_in_intensity``; every other multiplier is 1. When ``activate_all`` is
set, trade t < n_banks uses bank t as its lender so every bank trades.

Random numbers come from one PCG64 stream seeded with ``seed``. Before the
loop, it yields a ``(n_trades, 4)`` block of uniforms (lender, borrower, side,
time of day) and then a ``(n_trades, 2)`` block of standard normals (amount,
rate); row t of each block belongs to trade t.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, fields, replace
from datetime import date, time, timedelta
from enum import Enum
from pathlib import Path
from typing import IO, Mapping

import numba as nb
import numpy as np

from .errors import ConfigError
from .ingest import BankId, Side, TransactionRecord, filter_overnight, to_directed_trades
from .metrics import density
from .netbuild import build_year_network

TARGET_2006 = {"n_banks": 172, "density": 0.17, "on_trades": 90368, "mean_amount": 24.655}


class PlantedRole(str, Enum):
    PROVIDER = "provider"
    LOSER = "loser"
    NONE = "none"


@dataclass(frozen=True)
class SynthConfig:
    n_banks: int = 100
    n_providers: int = 5
    n_losers: int = 5
    n_trades: int = 30_000
    year: int = 2006
    base_rate: float = 3.0
    rate_noise_sd: float = 0.1
    provider_markup: float = 0.0
    attachment_exponent: float = 0.0
    provider_out_intensity: float = 8.0
    loser_in_intensity: float = 8.0
    amount_mean_log: float = math.log(24.655) - 0.5
    amount_sd_log: float = 1.0
    seed: int = 0
    country: str = "IT"
    activate_all: bool = True

    def __post_init__(self):
        for name in ("n_banks", "n_providers", "n_losers", "n_trades"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
        if self.n_providers + self.n_losers >= self.n_banks:
            raise ConfigError("n_providers + n_losers must be less than n_banks")
        if self.n_banks > 10_000:
            raise ConfigError("at most 10000 banks fit the bank-code format")
        if self.activate_all and self.n_trades < self.n_banks:
            raise ConfigError("activate_all needs n_trades >= n_banks")
        if not self.attachment_exponent >= 0:
            raise ConfigError("attachment_exponent must be non-negative")
        if not (self.provider_out_intensity > 0 and self.loser_in_intensity > 0):
            raise ConfigError("intensities must be positive")
        if not (self.rate_noise_sd >= 0 and self.amount_sd_log >= 0):
            raise ConfigError("standard deviations must be non-negative")
        if self.base_rate < 0:
            raise ConfigError("base_rate must be non-negative")
        if not 1 <= self.year <= 9999:
            raise ConfigError("year out of range")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    def as_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping) -> SynthConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown synth config keys: {sorted(unknown)}")
        return cls(**dict(data))


@dataclass
class SynthMarket:
    config: SynthConfig
    records: list[TransactionRecord]
    roles: dict[BankId, PlantedRole]

    def planted(self, role: PlantedRole) -> frozenset[BankId]:
        return frozenset(b for b, r in self.roles.items() if r is role)


def bank_ids(config: SynthConfig) -> list[BankId]:
    return [BankId(config.country, i + 1) for i in range(config.n_banks)]


def planted_roles(config: SynthConfig) -> list[PlantedRole]:
    """Providers are the first banks, losers the next ones."""
    p, q = config.n_providers, config.n_losers
    return ([PlantedRole.PROVIDER] * p + [PlantedRole.LOSER] * q
            + [PlantedRole.NONE] * (config.n_banks - p - q))


@nb.njit(cache=True)
def _pick(weights, total, u):
    target = u * total
    acc = 0.0
    last = -1
    for i in range(weights.shape[0]):
        w = weights[i]
        if w > 0.0:
            acc += w
            last = i
            if acc > target:
                return i
    return last


@nb.njit(cache=True)
def _simulate(n_banks, out_mult, in_mult, beta, activate, u_lend, u_borr, amounts):
    """Sequential lender/borrower choice; returns the two index arrays."""
    n = u_lend.shape[0]
    s_out = np.zeros(n_banks)
    s_in = np.zeros(n_banks)
    w_out = np.empty(n_banks)
    w_in = np.empty(n_banks)
    lenders = np.empty(n, dtype=np.int64)
    borrowers = np.empty(n, dtype=np.int64)
    for i in range(n_banks):
        w_out[i] = out_mult[i]
        w_in[i] = in_mult[i]
    for t in range(n):
        if activate and t < n_banks:
            a = t
        else:
            a = _pick(w_out, w_out.sum(), u_lend[t])
        saved = w_in[a]
        w_in[a] = 0.0
        b = _pick(w_in, w_in.sum(), u_borr[t])
        w_in[a] = saved
        lenders[t] = a
        borrowers[t] = b
        s_out[a] += amounts[t]
        s_in[b] += amounts[t]
        if beta != 0.0:
            w_out[a] = math.exp(beta * math.log1p(s_out[a])) * out_mult[a]
            w_in[b] = math.exp(beta * math.log1p(s_in[b])) * in_mult[b]
    return lenders, borrowers


def _draws(config: SynthConfig) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.Generator(np.random.PCG64(config.seed))
    uni = rng.random((config.n_trades, 4))
    nor = rng.standard_normal((config.n_trades, 2))
    return uni, nor


def _trade_dates(year: int, n: int) -> list[date]:
    start = date(year, 1, 1)
    n_days = (date(year + 1, 1, 1) - start).days
    days = (np.arange(n, dtype=np.int64) * n_days) // n
    cache = {int(d): start + timedelta(days=int(d)) for d in np.unique(days)}
    return [cache[int(d)] for d in days]


def generate_market(config: SynthConfig) -> SynthMarket:
    """Deterministic synthetic market for ``config`` (see the module docstring)."""
    uni, nor = _draws(config)
    amounts = np.maximum(np.round(np.exp(config.amount_mean_log
                                         + config.amount_sd_log * nor[:, 0]), 3), 0.001)
    roles = planted_roles(config)
    is_prov = np.array([r is PlantedRole.PROVIDER for r in roles])
    is_loser = np.array([r is PlantedRole.LOSER for r in roles])
    out_mult = np.where(is_prov, config.provider_out_intensity, 1.0)
    in_mult = np.where(is_loser, config.loser_in_intensity, 1.0)
    lenders, borrowers = _simulate(config.n_banks, out_mult, in_mult,
                                   float(config.attachment_exponent), config.activate_all,
                                   uni[:, 0].copy(), uni[:, 1].copy(), amounts)
    markup = np.where(is_prov[lenders] & is_loser[borrowers], config.provider_markup, 0.0)
    rates = np.round(np.maximum(config.base_rate + config.rate_noise_sd * nor[:, 1] + markup,
                                0.0), 4)
    bid = (uni[:, 2] < 0.5).tolist()
    seconds = (8 * 3600 + np.floor(uni[:, 3] * 10 * 3600)).astype(np.int64)

    banks = bank_ids(config)
    dates = _trade_dates(config.year, config.n_trades)
    sides = (Side.ASK, Side.BID)
    records = []
    for t in range(config.n_trades):
        lend, borr = banks[lenders[t]], banks[borrowers[t]]
        s = int(seconds[t])
        records.append(TransactionRecord(
            dates[t], time(s // 3600, (s // 60) % 60, s % 60),
            sides[bid[t]],
            lend if bid[t] else borr,     # bid: aggressor lends
            borr if bid[t] else lend,
            float(rates[t]), float(amounts[t]), "ON",
        ))
    return SynthMarket(config, records, dict(zip(banks, roles)))


def write_roles(roles: Mapping[BankId, PlantedRole], sink: IO[str]) -> None:
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(["bank", "planted_role"])
    for bank in sorted(roles):
        writer.writerow([str(bank), roles[bank].value])


def read_roles(source: IO[str]) -> dict[BankId, PlantedRole]:
    reader = csv.reader(source)
    if next(reader, None) != ["bank", "planted_role"]:
        raise ValueError("role map header must be bank,planted_role")
    return {BankId.parse(b): PlantedRole(r) for b, r in reader}


def write_config(config: SynthConfig, sink: IO[str]) -> None:
    json.dump(config.as_dict(), sink, indent=2, sort_keys=True)
    sink.write("\n")


def load_config(path: str | Path) -> SynthConfig:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    return SynthConfig.from_dict(data)


@dataclass(frozen=True)
class MarketStats:
    n_banks: int
    density: float
    on_trades: int
    mean_amount: float

    def as_dict(self) -> dict:
        return asdict(self)


def measure_market(records: list[TransactionRecord]) -> MarketStats:
    """Node count, density, overnight trade count and mean amount of a one-year market."""
    on = filter_overnight(records)
    trades = to_directed_trades(on)
    years = {t.year for t in trades}
    if len(years) != 1:
        raise ValueError(f"expected a single-year market, got years {sorted(years)}")
    net = build_year_network(trades, years.pop())
    return MarketStats(net.n, density(net), len(on), math.fsum(t.amount for t in trades) / len(trades))


@dataclass(frozen=True)
class CalibrationTarget:
    n_banks: int
    density: float
    on_trades: int
    mean_amount: float

    @classmethod
    def year_2006(cls) -> CalibrationTarget:
        return cls(**TARGET_2006)


@dataclass(frozen=True)
class Calibration:
    config: SynthConfig
    measured: MarketStats
    iterations: int


DENSITY_TOL = 0.03


def _check_feasible(target: CalibrationTarget) -> None:
    n = target.n_banks
    if n < 2:
        raise ConfigError("infeasible target: n_banks must be at least 2")
    if target.on_trades < n:
        raise ConfigError(f"infeasible target: on_trades={target.on_trades} cannot activate "
                          f"n_banks={n} banks (need on_trades >= n_banks)")
    if not 0 < target.density <= 1:
        raise ConfigError("infeasible target: density must lie in (0, 1]")
    arcs = target.density * n * (n - 1)
    if arcs > target.on_trades:
        raise ConfigError(f"infeasible target: density {target.density} needs {arcs:.0f} arcs "
                          f"but on_trades={target.on_trades} trades form at most that many")
    if target.density * (n - 1) < 1 - 1e-12:
        raise ConfigError(f"infeasible target: density {target.density} is below 1/(n_banks-1), "
                          "the minimum for a market where every bank lends")
    if not target.mean_amount > 0:
        raise ConfigError("infeasible target: mean_amount must be positive")


def calibrate_to_paper(target: CalibrationTarget | Mapping | None = None, *, seed: int = 0,
                       base: SynthConfig | None = None, max_iter: int = 40) -> Calibration:
    """Find a config whose generated market matches ``target``.

    The node count and trade count are matched by construction (every bank is
    activated), the amount law's log-mean is set from the target mean with
    ``amount_sd_log`` fixed, and the attachment exponent is bisected on the
    measured density, which falls as attachment concentrates activity.
    """
    if target is None:
        target = CalibrationTarget.year_2006()
    elif not isinstance(target, CalibrationTarget):
        target = CalibrationTarget(**dict(target))
    _check_feasible(target)
    if base is None:
        base = SynthConfig(n_banks=target.n_banks, n_trades=target.on_trades)
    sd = base.amount_sd_log
    cfg = replace(base, n_banks=target.n_banks, n_trades=target.on_trades, seed=seed,
                  activate_all=True, provider_markup=0.0,
                  amount_mean_log=math.log(target.mean_amount) - 0.5 * sd * sd)

    def run(beta: float) -> tuple[SynthConfig, MarketStats]:
        c = replace(cfg, attachment_exponent=beta)
        return c, measure_market(generate_market(c).records)

    lo, hi = 0.0, 4.0
    c_lo, m_lo = run(lo)
    it = 1
    if abs(m_lo.density - target.density) <= DENSITY_TOL:
        return Calibration(c_lo, m_lo, it)
    if m_lo.density < target.density:
        raise ConfigError(f"infeasible target: density {target.density} exceeds "
                          f"{m_lo.density:.3f}, the densest market for {target.on_trades} trades")
    c_hi, m_hi = run(hi)
    it += 1
    if m_hi.density > target.density + DENSITY_TOL:
        raise ConfigError(f"infeasible target: density {target.density} is below "
                          f"{m_hi.density:.3f}, the sparsest market the generator reaches")
    best = (c_hi, m_hi)
    while it < max_iter:
        if abs(best[1].density - target.density) <= DENSITY_TOL / 3:
            break
        mid = 0.5 * (lo + hi)
        c_mid, m_mid = run(mid)
        it += 1
        if abs(m_mid.density - target.density) < abs(best[1].density - target.density):
            best = (c_mid, m_mid)
        if m_mid.density > target.density:
            lo = mid
        else:
            hi = mid
    return Calibration(best[0], best[1], it)
