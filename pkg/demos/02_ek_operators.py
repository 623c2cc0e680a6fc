"""Erdelyi-Kober integrals and derivatives on simple functions.

Run:  python3 demos/02_ek_operators.py
"""
import math

import numpy as np

from ekdiff import EKParams, SampledFunction, ek_derivative, ek_integral, ek_power_oracle, rl_integral

# power laws are eigenfunctions: I t^c = K t^c
p = EKParams(gamma=0.5, mu=0.7, eta=2.0)
t = np.array([0.5, 1.0, 2.0])
for c in (0.0, 1.0, 2.5):
    ratio = ek_integral(p, SampledFunction.power(c), t) / t ** c
    print(f"c={c}: I t^c / t^c = {np.round(ratio, 12)}  oracle {ek_power_oracle(p, c):.12f}")

# with gamma = 0 and eta = 1 the operator is a scaled Riemann-Liouville integral
f = SampledFunction(lambda s: np.exp(-s))
mu, tt = 0.4, 1.7
print("EK:", ek_integral(EKParams(0, mu, 1), f, tt), " t^-mu J^mu:", tt ** -mu * rl_integral(mu, f, tt))

# the derivative undoes the integral
p = EKParams(0.2, 0.6, 1.3)
g = SampledFunction(lambda s: np.sin(s) + 2.0)
inner = SampledFunction(lambda s: ek_integral(p, g, s, rtol=1e-12))
print("D I g (1.1) =", ek_derivative(p, inner, 1.1), " g(1.1) =", math.sin(1.1) + 2.0)

# order 0 is the identity, with no quadrature at all
print("D^{gamma,0} g (1.1) =", ek_derivative(EKParams(0.2, 0.0, 1.3), g, 1.1))
