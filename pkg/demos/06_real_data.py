"""
Real-data workflow
==================

Two pension-fund risk/return indicators are expected to be weakly,
positively dependent.  The workflow: rank-transform the raw columns,
fit the model at a few (m, c) settings, compare by LPML, and read off
the credible interval for Spearman's rho.

The shipped CSV is a synthetic stand-in with n = 100 and sample
Spearman rho matched to 0.177 (see make_pension_data.py).
"""

import os

import numpy as np
from scipy import stats

from gridcopula import (
    McmcConfig,
    SpatialBetaPrior,
    cell_counts,
    lpml,
    rank_transform,
    rho_interval,
    run_chain,
)

path = os.path.join(os.path.dirname(__file__), "..", "data", "pension_synthetic.csv")
x, y = np.loadtxt(path, delimiter=",", skiprows=1, unpack=True)
print(f"n = {x.size} observations")
print("sample Spearman rho:", round(stats.spearmanr(x, y).statistic, 3))

ranked = rank_transform(x, y)

print("\n m    c    LPML    95% rho interval")
best = None
for m in (4, 5):
    counts = cell_counts(ranked, m)
    for c in (0, 1, 2):
        prior = SpatialBetaPrior.constant(m, a=0.1, b=0.1, c=c)
        chain = run_chain(
            counts, prior,
            McmcConfig(iterations=3000, burn_in=500, thin=2, delta=0.25, seed=10 * m + c),
        )
        score = lpml(chain, counts)
        lo, hi = rho_interval(chain)
        marker = ""
        if best is None or score > best[0]:
            best = (score, m, c, lo, hi)
            marker = "  <- best so far"
        print(f"{m:>2d} {c:>4d} {score:7.3f}   ({lo:.3f}, {hi:.3f}){marker}")

_, m, c, lo, hi = best
print(f"\nLPML prefers m={m}, c={c}.")
if lo > 0:
    print(f"The interval ({lo:.3f}, {hi:.3f}) lies above zero: the positive")
    print("dependence between return and risk is credible, not just apparent.")
else:
    print(f"The interval ({lo:.3f}, {hi:.3f}) covers zero at this setting.")
