"""Small statistical helpers shared across modules."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy import stats as sps


def nearest_rank_index(p: float, n: int) -> int:
    """0-based index of the nearest-rank ``p``-th percentile among ``n`` sorted values.

    The rank is ``max(1, ceil(p/100 * n))``, computed in exact rational arithmetic
    so that e.g. ``p=95, n=100`` gives rank 95 rather than 96.
    """
    if n < 1:
        raise ValueError("percentile of an empty sample")
    if not 0 <= p <= 100:
        raise ValueError(f"percentile must lie in [0, 100], got {p}")
    rank = math.ceil(Fraction(str(p)) * n / 100)
    return min(max(rank, 1), n) - 1


def nearest_rank(values: Sequence[float], p: float) -> float:
    ordered = sorted(values)
    return ordered[nearest_rank_index(p, len(ordered))]


@dataclass(frozen=True)
class FiveNumber:
    min: float
    q1: float
    median: float
    q3: float
    max: float
    n: int

    def as_dict(self) -> dict:
        return {"min": self.min, "q1": self.q1, "median": self.median,
                "q3": self.q3, "max": self.max, "n": self.n}


def five_number(values: Sequence[float]) -> FiveNumber:
    ordered = sorted(values)
    n = len(ordered)
    if n == 0:
        raise ValueError("five-number summary of an empty sample")
    return FiveNumber(
        min=ordered[0],
        q1=ordered[nearest_rank_index(25, n)],
        median=ordered[nearest_rank_index(50, n)],
        q3=ordered[nearest_rank_index(75, n)],
        max=ordered[-1],
        n=n,
    )


def sample_std(values: Sequence[float]) -> float:
    """Sample standard deviation (n-1 denominator); 0.0 for a single value."""
    n = len(values)
    if n == 0:
        raise ValueError("std of an empty sample")
    if n == 1:
        return 0.0
    return float(np.std(np.asarray(values, dtype=float), ddof=1))


@dataclass(frozen=True)
class Correlation:
    """Pearson coefficient with its two-sided p-value, or the reason it is absent."""

    r: float | None
    p_value: float | None
    n: int
    reason: str | None = None

    @property
    def defined(self) -> bool:
        return self.r is not None

    def as_dict(self) -> dict:
        out = {"r": self.r, "p_value": self.p_value, "n": self.n}
        if self.reason is not None:
            out["reason"] = self.reason
        return out


def pearson(x: Sequence[float], y: Sequence[float]) -> Correlation:
    """Pearson correlation; significance from t = r*sqrt((n-2)/(1-r^2)) on n-2 dof."""
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    if xa.shape != ya.shape:
        raise ValueError("correlation of vectors with different lengths")
    n = len(xa)
    if n < 3:
        return Correlation(None, None, n, "fewer than 3 observations")
    dx = xa - xa.mean()
    dy = ya - ya.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        return Correlation(None, None, n, "constant vector")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    r = max(-1.0, min(1.0, r))
    if abs(r) == 1.0:
        return Correlation(r, 0.0, n)
    t = r * math.sqrt((n - 2) / (1.0 - r * r))
    p = float(2.0 * sps.t.sf(abs(t), n - 2))
    return Correlation(r, min(p, 1.0), n)


def fmt_num(x: float | int) -> str:
    """Shortest round-tripping decimal form used in every machine-readable output."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return repr(float(x))
