"""Power-law tail fitting for degree distributions with a KS bootstrap test.

The lower cutoff ``xmin`` is the distinct sample value that minimizes the
Kolmogorov-Smirnov distance between the empirical and fitted tail CCDFs,
evaluated at the observed tail values. Given ``xmin``, the exponent is the
exact discrete maximum-likelihood estimate (Hurwitz zeta normalization);
``estimator="continuous"`` instead uses the closed form
``1 + n_tail / sum(ln(x / (xmin - 0.5)))``, which is biased for small ``xmin``.

The goodness-of-fit p-value is the semiparametric bootstrap: each replicate
draws every observation from the empirical body (values below ``xmin``) with
probability ``1 - n_tail/n`` and from the fitted law otherwise, the full fit
(including the ``xmin`` scan) is repeated, and p is the share of replicate KS
distances at least as large as the observed one.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy.special import zeta

from . import _plkernel
from .errors import StatisticalPreconditionError

DEFAULT_N_BOOT = 1000
MIN_SAMPLES = 10
_TABLE_SIZE = 100_000
_MAX_DRAW = 2.0 ** 53


@dataclass(frozen=True)
class PowerLawFit:
    gamma: float
    xmin: int
    ks_stat: float
    n_tail: int
    n: int
    estimator: str = "discrete"
    p_value: float | None = None
    n_boot: int | None = None
    seed: int | None = None

    def as_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "xmin": self.xmin,
            "ks_stat": self.ks_stat,
            "p_value": self.p_value,
            "n_tail": self.n_tail,
            "n": self.n,
            "estimator": self.estimator,
            "n_boot": self.n_boot,
            "seed": self.seed,
        }


def _as_samples(samples: Sequence[int]) -> np.ndarray:
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1:
        raise ValueError("samples must be one-dimensional")
    if x.size < MIN_SAMPLES:
        raise StatisticalPreconditionError(
            f"power-law fit needs at least {MIN_SAMPLES} samples, got {x.size}")
    if np.any(x < 1) or np.any(x != np.floor(x)):
        raise ValueError("samples must be positive integers")
    if np.all(x == x[0]):
        raise StatisticalPreconditionError("degenerate distribution")
    return np.sort(x)


def _discrete_flag(estimator: str) -> bool:
    if estimator not in ("discrete", "continuous"):
        raise ValueError(f"unknown estimator {estimator!r}")
    return estimator == "discrete"


def fit_power_law(samples: Sequence[int], estimator: str = "discrete") -> PowerLawFit:
    x = _as_samples(samples)
    g, xmin, d, n_tail = _plkernel.fit_sorted(x, _discrete_flag(estimator))
    return PowerLawFit(gamma=float(g), xmin=int(xmin), ks_stat=float(d),
                       n_tail=int(n_tail), n=int(x.size), estimator=estimator)


def ks_distance(samples: Sequence[int], gamma: float, xmin: int) -> float:
    """KS distance between the samples' tail (>= xmin) and a given discrete power law."""
    x = np.sort(np.asarray(samples, dtype=float))
    tail = x[x >= xmin]
    if tail.size == 0:
        raise ValueError("no samples at or above xmin")
    u, c = np.unique(tail, return_counts=True)
    ntail = np.cumsum(c[::-1])[::-1].astype(float)
    fitted = zeta(gamma, u) / zeta(gamma, u[0])
    return float(np.max(np.abs(ntail / ntail[0] - fitted)))


class DiscretePowerLaw:
    """P(X = k) = k^-gamma / zeta(gamma, xmin) for integers k >= xmin.

    Inverse-CDF sampling is exact below ``xmin + 100000`` (tabulated CDF); the
    rare draws beyond the table use the continuous approximation conditioned
    on exceeding it, reusing the same uniform, capped at 2^53.
    """

    def __init__(self, gamma: float, xmin: int):
        if not gamma > 1:
            raise ValueError("gamma must exceed 1")
        if xmin < 1:
            raise ValueError("xmin must be a positive integer")
        self.gamma = float(gamma)
        self.xmin = int(xmin)
        k = np.arange(xmin, xmin + _TABLE_SIZE, dtype=float)
        self._cdf = np.cumsum(k ** -self.gamma) / zeta(self.gamma, xmin)

    def ccdf(self, x) -> np.ndarray:
        """P(X >= x)."""
        return zeta(self.gamma, np.asarray(x, dtype=float)) / zeta(self.gamma, self.xmin)

    def from_uniform(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        idx = np.searchsorted(self._cdf, u, side="right")
        out = self.xmin + idx.astype(float)
        beyond = idx >= _TABLE_SIZE
        if beyond.any():
            top = self._cdf[-1]
            v = np.clip((u[beyond] - top) / (1.0 - top), 0.0, 1.0 - 1e-16)
            cut = self.xmin + _TABLE_SIZE
            with np.errstate(over="ignore"):
                far = np.floor((cut - 0.5) * (1.0 - v) ** (-1.0 / (self.gamma - 1.0)) + 0.5)
            out[beyond] = np.minimum(far, _MAX_DRAW)
        return out

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.from_uniform(rng.random(size))


def sample_discrete_power_law(rng: np.random.Generator, gamma: float, xmin: int,
                              size: int) -> np.ndarray:
    return DiscretePowerLaw(gamma, xmin).sample(rng, size)


def bootstrap_replicates(fit: PowerLawFit, samples: Sequence[int], n_boot: int,
                         seed: int) -> np.ndarray:
    """The (n_boot x n) matrix of semiparametric replicates.

    Replicate ``r`` consumes 2n uniforms from its own PCG64 stream, spawned from
    ``seed`` by index: the first n decide body vs tail membership, the second n
    become the drawn value (a body index or a power-law inverse-CDF draw).
    """
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    body = x[x < fit.xmin]
    p_tail = fit.n_tail / n
    uni = np.empty((n_boot, 2 * n))
    for r, child in enumerate(np.random.SeedSequence(seed).spawn(n_boot)):
        uni[r] = np.random.Generator(np.random.PCG64(child)).random(2 * n)
    member, value = uni[:, :n], uni[:, n:]
    in_tail = member < p_tail if body.size else np.ones_like(member, dtype=bool)
    reps = np.empty_like(value)
    reps[in_tail] = DiscretePowerLaw(fit.gamma, fit.xmin).from_uniform(value[in_tail])
    if body.size:
        pick = np.minimum((value[~in_tail] * body.size).astype(np.int64), body.size - 1)
        reps[~in_tail] = body[pick]
    return reps


def bootstrap_ks(fit: PowerLawFit, samples: Sequence[int], n_boot: int = DEFAULT_N_BOOT,
                 seed: int = 0) -> np.ndarray:
    """Minimized KS distance of each refit replicate (see :func:`bootstrap_replicates`)."""
    if n_boot < 1:
        raise ValueError("n_boot must be positive")
    reps = bootstrap_replicates(fit, samples, n_boot, seed)
    stats = np.empty(n_boot)
    flat = np.all(reps == reps[:, :1], axis=1)
    # a replicate with a single distinct value cannot be refit; count it as exceeding
    stats[flat] = np.inf
    if (~flat).any():
        stats[~flat] = _plkernel.ks_batch(reps[~flat], _discrete_flag(fit.estimator))
    return stats


def pvalue_from_replicates(observed_ks: float, replicate_ks: np.ndarray) -> float:
    return float(np.mean(np.asarray(replicate_ks) >= observed_ks))


def gof_pvalue(fit: PowerLawFit, samples: Sequence[int], n_boot: int = DEFAULT_N_BOOT,
               seed: int = 0) -> float:
    if n_boot < 100:
        raise ValueError("n_boot must be at least 100")
    _as_samples(samples)
    return pvalue_from_replicates(fit.ks_stat, bootstrap_ks(fit, samples, n_boot, seed))


def fit_and_test(samples: Sequence[int], n_boot: int = DEFAULT_N_BOOT, seed: int = 0,
                 estimator: str = "discrete") -> PowerLawFit:
    fit = fit_power_law(samples, estimator)
    p = gof_pvalue(fit, samples, n_boot, seed)
    return replace(fit, p_value=p, n_boot=n_boot, seed=seed)
