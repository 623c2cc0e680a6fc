"""Green functions of Erdelyi-Kober fractional diffusion and their limits."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, interpolate, optimize

from ._quad import gk_quad
from .errors import DiracOrder, DomainError
from .mwright import mwright_eval, mwright_tail_cut

__all__ = [
    "DiffusionParams",
    "GreenProfile",
    "gaussian_green",
    "stretched_gaussian_green",
    "time_fractional_green",
    "ggbm_green",
    "green_variance",
    "ggbm_cdf",
    "ggbm_cell_average",
    "green_mixture",
    "directing_pdf",
    "general_solution",
    "profile_extent",
    "green_profile",
]


@dataclass(frozen=True)
class DiffusionParams:
    """One member (alpha, beta) of the ggBm family, 0 < alpha <= 2, 0 < beta <= 1."""

    alpha: float
    beta: float

    def __post_init__(self):
        a, b = float(self.alpha), float(self.beta)
        if not 0.0 < a <= 2.0:
            raise DomainError(f"alpha must lie in (0, 2], got {self.alpha!r}")
        if not 0.0 < b <= 1.0:
            raise DomainError(f"beta must lie in (0, 1], got {self.beta!r}")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)

    @property
    def hurst(self) -> float:
        return self.alpha / 2.0

    @property
    def is_slow(self) -> bool:
        return self.alpha < 1.0

    @property
    def is_fast(self) -> bool:
        return self.alpha > 1.0

    @property
    def kind(self) -> str:
        """Named special case, if any: brownian, fbm, grey, or general."""
        if self.beta == 1.0:
            return "brownian" if self.alpha == 1.0 else "fbm"
        if self.alpha == self.beta:
            return "grey"
        return "general"


def _check_t(t):
    t = np.asarray(t, dtype=float)
    if np.any(~(t > 0)):
        raise DomainError("t must be positive")
    return t


def _out(v):
    return float(v) if np.ndim(v) == 0 else v


def gaussian_green(x, t):
    """Heat kernel (4 pi t)^(-1/2) exp(-x^2 / 4t)."""
    t = _check_t(t)
    x = np.asarray(x, dtype=float)
    return _out(np.exp(-x * x / (4.0 * t)) / np.sqrt(4.0 * math.pi * t))


def stretched_gaussian_green(alpha: float, x, t):
    """(4 pi)^(-1/2) t^(-alpha/2) exp(-x^2 / 4 t^alpha): the beta = 1 Green function."""
    t = _check_t(t)
    x = np.asarray(x, dtype=float)
    ta = t ** alpha
    return _out(np.exp(-x * x / (4.0 * ta)) / np.sqrt(4.0 * math.pi * ta))


def time_fractional_green(beta: float, x, t):
    """(1/2) t^(-beta/2) M_{beta/2}(|x| t^(-beta/2)): the alpha = beta Green function."""
    t = _check_t(t)
    x = np.asarray(x, dtype=float)
    s = t ** (-beta / 2.0)
    return _out(0.5 * s * mwright_eval(beta / 2.0, np.abs(x) * s))


def ggbm_green(p: DiffusionParams, x, t):
    """One-point density (1/2) t^(-alpha/2) M_{beta/2}(|x| t^(-alpha/2))."""
    t = _check_t(t)
    x = np.asarray(x, dtype=float)
    s = t ** (-p.alpha / 2.0)
    x, s = np.broadcast_arrays(x, s)
    return _out(0.5 * s * mwright_eval(p.beta / 2.0, np.abs(x) * s))


def green_variance(p: DiffusionParams, t):
    """<x^2>(t) = 2 t^alpha / Gamma(beta + 1)."""
    t = _check_t(t)
    return _out(2.0 * t ** p.alpha / math.gamma(p.beta + 1.0))


@lru_cache(maxsize=32)
def _mass_table(nu: float, n_knots: int = 8192):
    """Cubic Hermite interpolant of A(y) = int_0^y M_nu on [0, y_cut], A(y_cut) ~ 1.

    Gaps are integrated with 10-point Gauss-Legendre and accumulated; the
    Hermite slopes are M_nu itself.  Beyond y_cut the missing mass is
    below 1e-17.
    """
    cut = mwright_tail_cut(nu, 1e-17)
    knots = np.linspace(0.0, cut, n_knots + 1)
    gx, gw = np.polynomial.legendre.leggauss(10)
    mid, rad = 0.5 * (knots[:-1] + knots[1:]), 0.5 * (knots[1] - knots[0])
    vals = mwright_eval(nu, mid[:, None] + rad * gx[None, :])
    cum = np.concatenate([[0.0], np.cumsum(rad * (vals @ gw))])
    return interpolate.CubicHermiteSpline(knots, cum, mwright_eval(nu, knots)), cut


def _half_mass(nu: float, y: np.ndarray) -> np.ndarray:
    spline, cut = _mass_table(float(nu))
    return spline(np.minimum(y, cut))


def ggbm_cdf(p: DiffusionParams, x, t: float):
    """Distribution function 1/2 + sign(x)/2 int_0^(|x| t^(-alpha/2)) M_{beta/2}(y) dy."""
    t = float(_check_t(t))
    x = np.asarray(x, dtype=float)
    y = np.abs(x) * t ** (-p.alpha / 2.0)
    return _out(0.5 + 0.5 * np.sign(x) * _half_mass(p.beta / 2.0, y))


def ggbm_cell_average(p: DiffusionParams, x, dx: float, t):
    """Mean of the one-point density over [x - dx/2, x + dx/2] (broadcast over x and t)."""
    t = _check_t(t)
    x = np.asarray(x, dtype=float)
    s = t ** (-p.alpha / 2.0)
    nu = p.beta / 2.0

    def F(z):
        return 0.5 * np.sign(z) * _half_mass(nu, np.abs(z) * s)

    return _out((F(x + 0.5 * dx) - F(x - 0.5 * dx)) / dx)


def green_mixture(p: DiffusionParams, x: float, t: float, tol: float = 1e-10) -> float:
    """Green function as a superposition of stretched Gaussians weighted by M_beta.

    int_0^inf (4 pi tau t^alpha)^(-1/2) exp(-x^2 / (4 tau t^alpha)) M_beta(tau) dtau,
    integrated in s = sqrt(tau) so the tau^(-1/2) factor disappears.
    """
    x, t = float(x), float(_check_t(t))
    if p.beta == 1.0:
        return stretched_gaussian_green(p.alpha, x, t)
    ta = t ** p.alpha
    pref = 1.0 / math.sqrt(math.pi * ta)
    beta = p.beta

    def integrand(s):
        with np.errstate(divide="ignore", under="ignore"):
            damp = np.exp(-x * x / (4.0 * s * s * ta))
        return pref * damp * mwright_eval(beta, s * s)

    upper = math.sqrt(mwright_tail_cut(beta, 1e-16))
    val, _ = gk_quad(integrand, 0.0, upper, tol=tol, breakpoints=[0.5, 1.0, 1.5, 2.0])
    return val


def directing_pdf(p: DiffusionParams, t_star, t: float):
    """Density t^-alpha M_beta(t_* t^-alpha) of the operational time t_* at time t.

    For beta = 1 this is the Dirac mass at t_* = t^alpha and DiracOrder is raised.
    """
    t = float(_check_t(t))
    if p.beta == 1.0:
        raise DiracOrder(f"beta = 1: operational time is deterministic, t_* = t^alpha = {t ** p.alpha}")
    t_star = np.asarray(t_star, dtype=float)
    ta = t ** p.alpha
    return _out(mwright_eval(p.beta, t_star / ta) / ta)


def profile_extent(p: DiffusionParams, t: float, rel: float = 1e-12) -> float:
    """Half-width X with ggbm_green(p, X, t) = rel * ggbm_green(p, 0, t)."""
    t = float(t)
    peak = ggbm_green(p, 0.0, t)
    f = lambda x: ggbm_green(p, x, t) - rel * peak
    hi = 2.0 * math.sqrt(green_variance(p, t))
    while f(hi) > 0:
        hi *= 2.0
    return optimize.brentq(f, 0.0, hi, xtol=1e-10 * hi)


@dataclass(frozen=True)
class GreenProfile:
    params: DiffusionParams
    t: float
    x_nodes: np.ndarray
    values: np.ndarray

    def mass(self) -> float:
        return float(integrate.trapezoid(self.values, self.x_nodes))

    def moment(self, k: int) -> float:
        return float(integrate.trapezoid(self.x_nodes ** k * self.values, self.x_nodes))


def green_profile(p: DiffusionParams, t: float, n: int = 4001, x_max: float | None = None) -> GreenProfile:
    """Tabulate the Green function on a symmetric uniform grid.

    Without ``x_max`` the grid reaches the point where the density drops to
    1e-12 of its peak.
    """
    if x_max is None:
        x_max = profile_extent(p, t)
    x = np.linspace(-x_max, x_max, n)
    x = 0.5 * (x - x[::-1])  # exactly antisymmetric nodes
    return GreenProfile(p, float(t), x, ggbm_green(p, x, t))


def general_solution(p: DiffusionParams, p0, x: float, t: float, support=None, tol: float = 1e-10) -> float:
    """Convolution int G(xi, t) P0(x - xi) dxi for initial data P0 supported on ``support``.

    ``support`` falls back to ``p0.domain`` when P0 is a SampledFunction.
    """
    if support is None:
        support = getattr(p0, "domain", None)
    if support is None:
        raise DomainError("general_solution needs a finite support hint [a, b] for P0")
    a, b = map(float, support)
    x, t = float(x), float(_check_t(t))
    lo, hi = x - b, x - a

    def integrand(xi):
        return ggbm_green(p, xi, t) * np.asarray(p0(x - xi), dtype=float)

    # the Green function has a cusp at xi = 0 when beta < 1
    pts = [0.0] if lo < 0.0 < hi else None
    val, _ = gk_quad(integrand, lo, hi, tol=tol, breakpoints=pts)
    return val
