"""Net generalized-centrality scores and the four-way role classification.

A bank's score is its generalized outdegree minus its generalized indegree.
With t1 the p_hi-th and t2 the p_lo-th nearest-rank percentile of the scores:

    Big     score >= t1
    Loser   score <= t2
    Lender  0 <= score < t1
    Borr    t2 < score < 0
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence

from ._stats import nearest_rank_index
from .errors import DegenerateNetworkError
from .ingest import BankId
from .metrics import NodeMetrics


class Category(str, Enum):
    BIG = "Big"
    LENDER = "Lender"
    BORR = "Borr"
    LOSER = "Loser"


@dataclass(frozen=True)
class NetScore:
    bank: BankId
    score: float


@dataclass(frozen=True)
class KeyPlayerClassification:
    t1: float
    t2: float
    p_hi: float
    p_lo: float
    categories: Mapping[BankId, Category]
    scores: Mapping[BankId, float]
    degenerate: bool = False

    def members(self, category: Category) -> frozenset[BankId]:
        return frozenset(b for b, c in self.categories.items() if c is category)

    def category(self, bank: BankId) -> Category:
        return self.categories[bank]

    @property
    def banks(self) -> tuple[BankId, ...]:
        return tuple(sorted(self.categories))


def net_scores(metrics: Sequence[NodeMetrics]) -> list[NetScore]:
    """Scores sorted ascending (ties broken by bank code)."""
    alphas = {m.alpha for m in metrics}
    if len(alphas) > 1:
        raise ValueError(f"metrics computed with different alphas: {sorted(alphas)}")
    scores = [NetScore(m.bank, m.gen_out - m.gen_in) for m in metrics]
    return sorted(scores, key=lambda s: (s.score, s.bank))


def categorize(score: float, t1: float, t2: float) -> Category:
    if score >= t1:
        return Category.BIG
    if score <= t2:
        return Category.LOSER
    if score >= 0:
        return Category.LENDER
    return Category.BORR


def classify(scores: Iterable[NetScore], p_hi: float = 95, p_lo: float = 5
             ) -> KeyPlayerClassification:
    scores = list(scores)
    n = len(scores)
    if n < 3:
        raise DegenerateNetworkError(f"classification needs at least 3 banks, got {n}")
    if not p_lo < p_hi:
        raise ValueError("p_lo must be below p_hi")
    values = sorted(s.score for s in scores)
    t1 = values[nearest_rank_index(p_hi, n)]
    t2 = values[nearest_rank_index(p_lo, n)]
    degenerate = t1 == t2
    if degenerate:
        warnings.warn("all thresholds coincide; classification is degenerate", stacklevel=2)
    return KeyPlayerClassification(
        t1=t1, t2=t2, p_hi=p_hi, p_lo=p_lo,
        categories={s.bank: categorize(s.score, t1, t2) for s in scores},
        scores={s.bank: s.score for s in scores},
        degenerate=degenerate,
    )


def group_persistence(group_a: Iterable[BankId], group_b: Iterable[BankId]) -> float:
    """Fraction of ``group_a`` that is also in ``group_b``."""
    a = set(group_a)
    if not a:
        raise ValueError("persistence of an empty group")
    return len(a & set(group_b)) / len(a)
