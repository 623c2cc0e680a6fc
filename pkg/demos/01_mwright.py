"""The M-Wright function: values, moments and the composition law.

Run:  python3 demos/01_mwright.py
"""
import math

import numpy as np

from ekdiff import mwright_build_table, mwright_compose, mwright_eval, mwright_moment

# order 1/2 is a Gaussian kernel
z = np.linspace(0.0, 4.0, 5)
print("M_1/2(z)             ", np.round(mwright_eval(0.5, z), 10))
print("exp(-z^2/4)/sqrt(pi) ", np.round(np.exp(-z * z / 4) / math.sqrt(math.pi), 10))

# small orders concentrate mass near zero, orders close to 1 pile up near z = 1
for nu in (0.1, 0.5, 0.9):
    zz = np.linspace(0, 3, 301)
    m = mwright_eval(nu, zz)
    print(f"nu={nu}: M(0)={m[0]:.4f} = 1/Gamma(1-nu)={1 / math.gamma(1 - nu):.4f}, mode at z={zz[m.argmax()]:.2f}")

# moments are Gamma ratios; the tabulated density reproduces them
tab = mwright_build_table(0.75)
for delta in (0, 1, 2):
    print(f"int tau^{delta} M_0.75 = {mwright_moment(0.75, delta):.8f}  (table: {tab.moment(delta):.8f})")

# composing orders 0.6 and 0.5 gives order 0.3
xi, t = 0.5, 2.0
lhs = mwright_compose(0.6, 0.5, xi, t)
rhs = t ** -0.3 * mwright_eval(0.3, xi * t ** -0.3)
print(f"composition {lhs:.15f} vs direct {rhs:.15f}")
