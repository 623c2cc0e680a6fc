"""Green functions of the family and their limits.

Run:  python3 demos/03_green_functions.py
"""
import math

import numpy as np

from ekdiff import (
    DiffusionParams,
    directing_pdf,
    gaussian_green,
    ggbm_green,
    green_mixture,
    green_profile,
    green_variance,
    time_fractional_green,
)

x = np.array([0.0, 0.5, 1.0, 2.0])

# alpha = beta = 1 is ordinary diffusion
print("Brownian     ", ggbm_green(DiffusionParams(1, 1), x, 1.0))
print("Gaussian     ", gaussian_green(x, 1.0))

# alpha = beta < 1 is time-fractional diffusion; note the cusp at x = 0
print("grey (0.6)   ", ggbm_green(DiffusionParams(0.6, 0.6), x, 1.0))
print("time-frac    ", time_fractional_green(0.6, x, 1.0))

# the same density as a superposition of Gaussians with random variance
p = DiffusionParams(0.8, 0.5)
for xi in x:
    print(f"x={xi}: direct {ggbm_green(p, xi, 2.0):.12f}  mixture {green_mixture(p, xi, 2.0):.12f}")

# variance grows like t^alpha: slow for alpha < 1, fast for alpha > 1
for a in (0.5, 1.0, 1.5):
    q = DiffusionParams(a, 0.7)
    prof = green_profile(q, 2.0, n=20001)
    speed = "slow" if q.is_slow else "fast" if q.is_fast else "normal"
    print(f"alpha={a} ({speed}): <x^2>(2) profile {prof.moment(2):.5f}, law {green_variance(q, 2.0):.5f}")

# operational time has mean t^alpha / Gamma(beta + 1)
s = np.linspace(0, 60, 60001)
dens = directing_pdf(p, s, 2.0)
print("mean operational time", np.trapezoid(s * dens, s), "law", 2.0 ** 0.8 / math.gamma(1.5))
