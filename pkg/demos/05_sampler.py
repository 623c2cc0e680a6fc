"""Monte Carlo paths: an M_beta amplitude times a fractional Brownian motion.

Run:  python3 demos/05_sampler.py
"""
import math

import numpy as np
from scipy import stats

from ekdiff import DiffusionParams, EnsembleConfig, ensemble_stats, ggbm_cdf, ggbm_paths

t = np.linspace(0.0, 1.0, 33)
for alpha, beta in [(0.5, 0.5), (1.0, 1.0), (1.5, 0.8)]:
    p = DiffusionParams(alpha, beta)
    ens = ggbm_paths(EnsembleConfig(p, t, 20000, seed=1))
    st = ensemble_stats(ens)
    ks = stats.kstest(ens.paths[:, -1], lambda x: ggbm_cdf(p, x, 1.0)).statistic
    amp = st.amplitude(alpha).mean()
    print(f"({alpha},{beta}): slope {st.loglog_slope:.3f}, <x^2>/t^alpha {amp:.3f} "
          f"(law {2 / math.gamma(beta + 1):.3f}), KS at t=1 {ks:.4f} (1% critical {1.63 / math.sqrt(20000):.4f})")

# beta < 1 marginals have heavier tails than a Gaussian of the same variance
x = ggbm_paths(EnsembleConfig(DiffusionParams(1.0, 0.5), [0.0, 1.0], 50000, seed=2)).paths[:, -1]
print("kurtosis at beta=0.5:", np.mean(x ** 4) / np.mean(x ** 2) ** 2, "(Gaussian: 3)")
