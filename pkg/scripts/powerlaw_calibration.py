"""Estimator accuracy and bootstrap size of the power-law fit on synthetic data.

Usage: python3 scripts/powerlaw_calibration.py [--fits 50] [--trials 200] [--n-null 200]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from netlab.powerlaw import fit_power_law, gof_pvalue, sample_discrete_power_law


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--gamma", type=float, default=2.5)
    ap.add_argument("--fits", type=int, default=50)
    ap.add_argument("--n", type=int, default=10_000, help="sample size of the accuracy fits")
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--n-null", type=int, default=200, help="sample size of each null trial")
    ap.add_argument("--n-boot", type=int, default=1000)
    ap.add_argument("--estimator", choices=("discrete", "continuous"), default="discrete")
    args = ap.parse_args()

    t0 = time.perf_counter()
    gammas = np.array([
        fit_power_law(sample_discrete_power_law(np.random.default_rng(s), args.gamma, 1, args.n),
                      args.estimator).gamma
        for s in range(args.fits)])
    inside = np.mean((gammas >= args.gamma - 0.1) & (gammas <= args.gamma + 0.1))
    print(f"gamma-hat mean {gammas.mean():.4f} sd {gammas.std(ddof=1):.4f}; "
          f"within +-0.1 in {inside:.0%} of {args.fits} fits ({time.perf_counter() - t0:.1f} s)")

    t0 = time.perf_counter()
    pvals = []
    for trial in range(args.trials):
        x = sample_discrete_power_law(np.random.default_rng(10_000 + trial), args.gamma, 1,
                                      args.n_null)
        pvals.append(gof_pvalue(fit_power_law(x, args.estimator), x, args.n_boot, seed=trial))
    pvals = np.array(pvals)
    print(f"null p-values: rejection at 0.1 = {np.mean(pvals < 0.1):.3f}, "
          f"deciles {np.round(np.quantile(pvals, np.linspace(0.1, 0.9, 9)), 2).tolist()} "
          f"({time.perf_counter() - t0:.1f} s)")


if __name__ == "__main__":
    main()
