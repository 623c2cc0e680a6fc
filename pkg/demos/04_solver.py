"""Solving the integral equation numerically from a narrow start.

The run starts from the exact Green function at a small t0 and marches
in stretched time T = t^(alpha/beta), where the memory kernel is Abel.

Run:  python3 demos/04_solver.py
"""
import math

import numpy as np

from ekdiff import DiffusionParams, Grid1D, SolverConfig, ek_residual, ggbm_green, green_variance, solve
from ekdiff.solver import min_resolved_t0

for alpha, beta in [(1.0, 1.0), (0.6, 0.6), (1.4, 1.0), (0.8, 0.5)]:
    p = DiffusionParams(alpha, beta)
    grid = Grid1D(-10.0, 10.0, 401)
    t0 = max(0.01, min_resolved_t0(p, grid))
    f = solve(SolverConfig(p, grid, t0=t0, t_end=1.0, nt=200))
    err = f.l1_error(ggbm_green(p, f.x, 1.0))
    var = np.max(np.abs(f.variance / green_variance(p, f.times) - 1))
    print(f"({alpha},{beta}) t0={t0:.3g}: L1 at t=1 {err:.2e}, worst variance error {var:.1e}, "
          f"mass drift {np.max(np.abs(f.mass_drift)):.1e}")

# first-order piecewise-constant scheme against the default piecewise-linear one
p = DiffusionParams(1.0, 1.0)
for scheme in ("constant", "linear"):
    errs = []
    for nt in (9, 17, 33):
        f = solve(SolverConfig(p, Grid1D(-10, 10, 1601), t0=0.03, nt=nt, scheme=scheme))
        errs.append(f.l1_error(ggbm_green(p, f.x, 1.0)))
    rates = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    print(f"{scheme:8s} L1 {['%.1e' % e for e in errs]}  observed orders {np.round(rates, 2)}")

# the stored history also satisfies the differential (Erdelyi-Kober) form
p = DiffusionParams(0.8, 0.5)
f = solve(SolverConfig(p, Grid1D(-10, 10, 401), t0=0.2, nt=101))
far = np.nonzero((np.abs(f.x) >= 1.0) & (np.abs(f.x) < 10.0))[0]
print("residual of the differential form at t=1:", ek_residual(f, -1, nodes=far))
