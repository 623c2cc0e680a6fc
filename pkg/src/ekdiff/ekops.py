"""Erdelyi-Kober fractional integrals and derivatives of one-variable functions.

The integral

    I^{gamma,mu}_eta phi(t) = eta / Gamma(mu) * t^(-eta(mu+gamma))
        * int_0^t tau^(eta(gamma+1)-1) (t^eta - tau^eta)^(mu-1) phi(tau) dtau

is computed after scaling tau = t sigma, which removes every power of t:

    I phi(t) = eta / Gamma(mu) int_0^1 sigma^(eta(gamma+1)-1) (1 - sigma^eta)^(mu-1) phi(t sigma) dsigma.

On [1/2, 1] the (1 - sigma)^(mu-1) endpoint factor becomes the weight of a
Gauss-Jacobi rule; what is left, including (1 - sigma^eta)/(1 - sigma), is
smooth.  On [0, 1/2] panels halve toward the origin and the last one uses
a Gauss-Jacobi rule for sigma^(eta(gamma+1)-1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy import interpolate, special

from .errors import DomainError, NonConvergence, Unsupported

__all__ = [
    "EKParams",
    "SampledFunction",
    "ek_integral",
    "ek_power_oracle",
    "rl_integral",
    "ek_derivative",
]

INTEGRAL_RTOL = 1e-8
DERIVATIVE_TOL = 1e-5
_N_PANELS = 40


@dataclass(frozen=True)
class EKParams:
    """Parameters (gamma, mu, eta) of an Erdelyi-Kober operator."""

    gamma: float
    mu: float
    eta: float

    def __post_init__(self):
        for name in ("gamma", "mu", "eta"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not self.eta > 0:
            raise DomainError(f"eta must be positive, got {self.eta}")
        if not self.mu >= 0:
            raise DomainError(f"mu must be nonnegative, got {self.mu}")
        if not math.isfinite(self.gamma):
            raise DomainError("gamma must be finite")

    @property
    def n(self) -> int:
        """Integer order ceil(mu) of the associated derivative."""
        return math.ceil(self.mu)


@dataclass(frozen=True)
class SampledFunction:
    """A deterministic real function of t > 0.

    ``evaluator`` must accept numpy arrays unless ``vectorized`` is False,
    in which case it is mapped over the input element by element.  A
    vectorised evaluator may return extra trailing axes (a vector of
    functions sharing one argument); the operators carry them through.
    ``grid``, when present, is a uniform tabulation (t_values, f_values).
    """

    evaluator: Callable
    domain: Optional[tuple] = None
    smooth: Optional[str] = None
    vectorized: bool = True
    grid: Optional[tuple] = None

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.vectorized:
            out = np.asarray(self.evaluator(t), dtype=float)
            if out.shape[: t.ndim] != t.shape:
                out = np.broadcast_to(out, t.shape).copy()
            return out
        return np.vectorize(lambda s: float(self.evaluator(s)), otypes=[float])(t)

    @classmethod
    def power(cls, c: float, scale: float = 1.0) -> "SampledFunction":
        """scale * t^c."""
        return cls(lambda t: scale * np.power(t, c), smooth=f"power {c}")

    @classmethod
    def from_samples(cls, t, values) -> "SampledFunction":
        """Cubic-spline interpolant through tabulated values on a uniform grid."""
        t = np.asarray(t, dtype=float)
        values = np.asarray(values, dtype=float)
        spline = interpolate.CubicSpline(t, values)
        return cls(spline, domain=(t[0], t[-1]), smooth="cubic spline", grid=(t, values))

    def tabulate(self, t_min: float, t_max: float, n: int) -> "SampledFunction":
        t = np.linspace(t_min, t_max, n)
        return SampledFunction(self.evaluator, self.domain, self.smooth, self.vectorized, (t, self(t)))


def _as_function(phi) -> SampledFunction:
    return phi if isinstance(phi, SampledFunction) else SampledFunction(phi)


# ---------------------------------------------------------------------------
# quadrature rules on [0, 1]


@lru_cache(maxsize=256)
def _jacobi(n: int, a: float, b: float):
    return special.roots_jacobi(n, a, b)


@lru_cache(maxsize=64)
def _legendre(m: int):
    return np.polynomial.legendre.leggauss(m)


def _rule(p: EKParams, n_up: int, m_low: int, cuts=()):
    """Nodes sigma and weights for int_0^1 sigma^a (1 - sigma^eta)^(mu-1) f(sigma) dsigma.

    [c, 1] carries a Gauss-Jacobi rule for (1 - sigma)^(mu-1), with c = 1/2
    or the largest cut above it.  Below c, Gauss-Legendre panels halve
    toward 0 (breaking at every cut) and a last Gauss-Jacobi panel
    absorbs sigma^a.
    """
    eta, mu = p.eta, p.mu
    a = eta * (p.gamma + 1.0) - 1.0
    cuts = [float(q) for q in cuts if 0.0 < q < 1.0]
    c = max([0.5] + cuts)

    x, w = _jacobi(n_up, mu - 1.0, 0.0)
    om_up = (1.0 - c) * (1.0 - x) / 2.0
    s_up = 1.0 - om_up
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = -np.expm1(eta * np.log1p(-om_up)) / om_up
    w_up = s_up ** a * ratio ** (mu - 1.0) * w * ((1.0 - c) / 2.0) ** mu

    eps = 0.5 ** (_N_PANELS + 1)
    edges = np.concatenate([0.5 ** np.arange(1, _N_PANELS + 2, dtype=float), [c], [q for q in cuts if eps < q < c]])
    edges = np.unique(edges[edges <= c])
    lo, hi = edges[:-1], edges[1:]
    gx, gw = _legendre(m_low)
    mid, rad = 0.5 * (hi + lo), 0.5 * (hi - lo)
    s_gl = (mid[:, None] + rad[:, None] * gx[None, :]).ravel()
    w_gl = (rad[:, None] * gw[None, :]).ravel() * s_gl ** a

    jx, jw = _jacobi(m_low, 0.0, a)
    s_gj = eps * (1.0 + jx) / 2.0
    w_gj = jw * (eps / 2.0) ** (a + 1.0)

    s_lo = np.concatenate([s_gl, s_gj])
    w_lo = np.concatenate([w_gl, w_gj]) * (-np.expm1(eta * np.log(s_lo))) ** (mu - 1.0)
    return np.concatenate([s_up, s_lo]), np.concatenate([w_up, w_lo])


_cached_rule = lru_cache(maxsize=256)(_rule)


def _ek_sum(p: EKParams, phi: SampledFunction, t: np.ndarray, n_up: int, m_low: int, breakpoints=()):
    scale = p.eta / math.gamma(p.mu)
    if not breakpoints:
        sigma, weight = _cached_rule(p, n_up, m_low)
        vals = phi(t[:, None] * sigma[None, :])
        return scale * np.tensordot(vals, weight, axes=([1], [0]))
    rows = []
    for ti in t:
        sigma, weight = _rule(p, n_up, m_low, tuple(b / ti for b in breakpoints))
        rows.append(np.tensordot(phi(ti * sigma), weight, axes=([0], [0])))
    return scale * np.stack(rows)


def ek_integral(p: EKParams, phi, t, rtol: float = INTEGRAL_RTOL, breakpoints=()):
    """Erdelyi-Kober fractional integral I^{gamma,mu}_eta phi at t (scalar or array).

    Admissible phi: tau^(eta(gamma+1)-1) phi(tau) integrable at 0.  The
    error is estimated by comparing two rule sizes; NonConvergence is
    raised if it stays above ``rtol`` (relative, with an absolute floor
    of rtol * 1e-3 for values near zero).  ``breakpoints`` lists times
    where phi is not smooth; the quadrature panels are split there.
    """
    if not p.mu > 0:
        raise DomainError("the EK integral needs mu > 0")
    if p.eta * (p.gamma + 1.0) <= 0:
        raise DomainError("need eta (gamma + 1) > 0 for the weight sigma^(eta(gamma+1)-1) to be integrable")
    phi = _as_function(phi)
    t_arr = np.asarray(t, dtype=float)
    scalar = t_arr.ndim == 0
    t_flat = np.atleast_1d(t_arr).ravel()
    if np.any(~(t_flat > 0)):
        raise DomainError("t must be positive")
    breakpoints = tuple(float(b) for b in np.atleast_1d(breakpoints))

    coarse = _ek_sum(p, phi, t_flat, 24, 12, breakpoints)
    for n_up, m_low in ((48, 20), (96, 32), (192, 48)):
        fine = _ek_sum(p, phi, t_flat, n_up, m_low, breakpoints)
        err = np.abs(fine - coarse)
        if np.all(err <= rtol * np.maximum(np.abs(fine), 1e-3)):
            break
        coarse = fine
    else:
        raise NonConvergence(f"EK integral error estimate {err.max():.3g} above target {rtol:g}")
    if scalar:
        return float(fine[0]) if fine.ndim == 1 else fine[0]
    return fine.reshape(t_arr.shape + fine.shape[1:])


def ek_power_oracle(p: EKParams, c: float) -> float:
    """K with I^{gamma,mu}_eta [t^c] = K t^c, i.e. Gamma(g+1+c/eta)/Gamma(g+mu+1+c/eta)."""
    base = p.gamma + 1.0 + c / p.eta
    if not base > 0:
        raise DomainError(f"gamma + 1 + c/eta = {base} must be positive")
    return math.exp(math.lgamma(base) - math.lgamma(base + p.mu))


def rl_integral(mu: float, phi, t, rtol: float = INTEGRAL_RTOL):
    """Riemann-Liouville integral J^mu phi(t) = 1/Gamma(mu) int_0^t (t - tau)^(mu-1) phi(tau) dtau.

    Uses a single Gauss-Jacobi rule for (t - tau)^(mu - 1) on [0, t]; it
    shares no code with ``ek_integral``, so the two cross-check each other.
    """
    mu = float(mu)
    if not mu > 0:
        raise DomainError("mu must be positive")
    phi = _as_function(phi)
    t_arr = np.asarray(t, dtype=float)
    scalar = t_arr.ndim == 0
    t_flat = np.atleast_1d(t_arr).ravel()
    if np.any(~(t_flat > 0)):
        raise DomainError("t must be positive")

    def rule(n):
        x, w = special.roots_jacobi(n, mu - 1.0, 0.0)
        tau = t_flat[:, None] * (1.0 + x[None, :]) / 2.0
        return (t_flat / 2.0) ** mu * (phi(tau) @ w) / math.gamma(mu)

    prev = rule(16)
    n = 32
    while n <= 2048:
        cur = rule(n)
        err = np.abs(cur - prev)
        if np.all(err <= rtol * np.maximum(np.abs(cur), 1e-3)):
            return float(cur[0]) if scalar else cur.reshape(t_arr.shape)
        prev, n = cur, 2 * n
    raise NonConvergence(f"RL integral error estimate {err.max():.3g} above target {rtol:g}")


def _central_diff(f: Callable[[np.ndarray], np.ndarray], t: float, h: float):
    v = np.asarray(f(np.array([t - 2 * h, t - h, t + h, t + 2 * h])))
    return (v[0] - 8 * v[1] + 8 * v[2] - v[3]) / (12 * h)


def _derivative(f, t: float, tol: float):
    """4th-order central difference, step halved until Richardson estimates agree."""
    h = 0.05 * t
    d_prev = _central_diff(f, t, h)
    best, best_err = d_prev, math.inf
    for _ in range(8):
        h /= 2
        d = _central_diff(f, t, h)
        scale = max(1.0, float(np.max(np.abs(d))))
        err = float(np.max(np.abs(d - d_prev))) / 15.0 / scale
        rich = d + (d - d_prev) / 15.0
        if err < best_err:
            best, best_err = rich, err
        if err <= 0.1 * tol:
            return rich
        d_prev = d
    if best_err <= tol:
        return best
    raise NonConvergence(f"outer derivative did not settle (estimate {best_err:.3g})")


def ek_derivative(p: EKParams, phi, t: float, tol: float = DERIVATIVE_TOL,
                  inner_rtol: float = 1e-12, breakpoints=()):
    """Erdelyi-Kober derivative D^{gamma,mu}_eta phi(t) for 0 <= mu <= 1.

    D phi = (gamma + 1 + (t/eta) d/dt) I^{gamma+mu, 1-mu}_eta phi.  mu = 0
    returns phi(t) untouched; mu = 1 skips the (identity) inner integral.
    ``breakpoints`` is handed to the inner integral.
    """
    if p.mu > 1:
        raise Unsupported("only 0 <= mu <= 1 (n = 1) is implemented")
    phi = _as_function(phi)
    t = float(t)
    if not t > 0:
        raise DomainError("t must be positive")
    if p.mu == 0:
        out = phi(t)
        return float(out) if out.ndim == 0 else out

    if p.mu == 1:
        inner = phi
    else:
        q = EKParams(p.gamma + p.mu, 1.0 - p.mu, p.eta)

        def inner(s):
            return ek_integral(q, phi, s, rtol=inner_rtol, breakpoints=breakpoints)

    value = np.asarray(inner(np.array([t])))[0]
    slope = _derivative(inner, t, tol)
    out = (p.gamma + 1.0) * value + t / p.eta * slope
    return float(out) if np.ndim(out) == 0 else out
