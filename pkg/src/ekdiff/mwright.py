"""The M-Wright (Mainardi) function M_nu(z) on z >= 0.

Evaluation uses the defining power series

    M_nu(z) = sum_n (-z)^n / (n! Gamma(1 - nu - nu n))

in double precision wherever the alternating sum is well conditioned.
Past that point the series is either badly cancelling or needs far more
than 400 terms (nu close to 1), so the function switches to the
Zolotarev-Kanter integral of the one-sided stable law,

    M_nu(z) = z^(nu/(1-nu)) / (pi (1-nu)) * int_0^pi A(phi) exp(-z^(1/(1-nu)) A(phi)) dphi,

whose integrand is positive, so there is nothing to cancel.  An
arbitrary-precision summation of the series (mpmath) is kept as an
explicit method and as an independent check of both branches.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import mpmath
import numpy as np
from scipy import integrate, special

from ._quad import gk_quad
from .errors import DiracOrder, DomainError, NonConvergence

__all__ = [
    "WrightOrder",
    "MWrightTable",
    "mwright_eval",
    "mwright_moment",
    "mwright_tail_cut",
    "mwright_build_table",
    "mwright_compose",
    "switch_radius",
]

MAX_TERMS = 400
_EPS = np.finfo(float).eps
# accept the double series when its rounding estimate is below this (relative)
_SERIES_RTOL = 1e-14
# Gauss-Legendre panels for the integral branch: geometric toward both ends
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)
_N_GRADED = 12


@dataclass(frozen=True)
class WrightOrder:
    """Order nu of M_nu, 0 < nu <= 1.  nu == 1 is the Dirac mass at 1."""

    nu: float

    def __post_init__(self):
        nu = float(self.nu)
        if not (0.0 < nu <= 1.0) or math.isnan(nu):
            raise DomainError(f"M-Wright order must satisfy 0 < nu <= 1, got {self.nu!r}")
        object.__setattr__(self, "nu", nu)

    @property
    def is_dirac(self) -> bool:
        return self.nu == 1.0

    def __float__(self):
        return self.nu


def _order(nu) -> WrightOrder:
    return nu if isinstance(nu, WrightOrder) else WrightOrder(nu)


def _check_pointwise(nu) -> float:
    order = _order(nu)
    if order.is_dirac:
        raise DiracOrder("M_1 is the Dirac mass delta(tau - 1) and has no pointwise value")
    return order.nu


# ---------------------------------------------------------------------------
# double-precision series


def _series_double(nu: float, z: np.ndarray):
    """Sum the series for every z at once.

    Returns (value, ok) where ok flags entries whose truncation and
    rounding estimates both meet ``_SERIES_RTOL``.
    """
    n = np.arange(MAX_TERMS, dtype=float)
    x = 1.0 - nu * (n + 1.0)
    rg = special.rgamma(x)
    finite_rg = np.isfinite(rg) & (np.abs(x) < 170.0)

    z = np.asarray(z, dtype=float)[:, None]
    with np.errstate(divide="ignore", over="ignore", under="ignore", invalid="ignore"):
        # z^n / n! by running product keeps the rounding error ~ n eps
        ratio = np.where(n[None, 1:] > 0, -z / n[None, 1:], 0.0)
        pf = np.concatenate([np.ones_like(z), np.cumprod(ratio, axis=1)], axis=1)
        terms = pf * rg[None, :]
        # huge |x| or underflowed prefactor: fall back to log magnitudes
        logmag = n * np.log(z) - special.gammaln(n + 1.0) - special.gammaln(x)
        sign = (-1.0) ** n * special.gammasgn(x)
        alt = sign * np.exp(logmag)
        bad = ~finite_rg[None, :] | (np.abs(pf) < 1e-280)
        terms = np.where(bad, alt, terms)
        terms = np.where(z == 0.0, np.where(n == 0, rg[0], 0.0), terms)
        terms = np.where(np.isnan(terms), 0.0, terms)

    with np.errstate(over="ignore", invalid="ignore"):
        partial = np.cumsum(terms, axis=1)
        runmax = np.maximum.accumulate(np.abs(partial), axis=1)
        big = np.abs(terms) >= 1e-16 * runmax
    # index of the last term still above the truncation threshold
    last = MAX_TERMS - 1 - np.argmax(big[:, ::-1], axis=1)
    converged = last < MAX_TERMS - 8

    value = partial[:, -1]
    with np.errstate(over="ignore", invalid="ignore"):
        err = _EPS * np.sum(np.abs(terms) * (0.5 * n + 4.0), axis=1)
    ok = converged & np.isfinite(value) & (err <= _SERIES_RTOL * np.abs(value))
    return value, ok


# ---------------------------------------------------------------------------
# integral representation


def _log_sinc(x: np.ndarray) -> np.ndarray:
    """log(sin(x)/x) for 0 <= x < pi, accurate as x -> 0."""
    x = np.asarray(x, dtype=float)
    x2 = x * x
    small = -x2 * (1 / 6 + x2 * (1 / 180 + x2 * (1 / 2835 + x2 * (1 / 37800 + x2 / 467775))))
    with np.errstate(divide="ignore", invalid="ignore"):
        big = np.log(np.sin(x) / x)
    return np.where(x < 0.1, small, big)


def _kanter_log_excess(nu: float, phi: np.ndarray) -> np.ndarray:
    """g(phi) with A(phi) = A(0+) * exp(g(phi)); g(0) = 0 and g increases to +inf at pi."""
    p = 1.0 / (1.0 - nu)
    ls_nu = _log_sinc(nu * phi)
    return p * (ls_nu - _log_sinc(phi)) + _log_sinc((1.0 - nu) * phi) - ls_nu


@lru_cache(maxsize=None)
def _graded_rule(n_graded: int = _N_GRADED):
    """Composite Gauss-Legendre rule on (0, pi), panels halving toward both ends."""
    half = math.pi / 2
    left = half * 0.5 ** np.arange(n_graded, -1, -1, dtype=float)
    edges = np.concatenate([[0.0], left, math.pi - left[::-1][1:], [math.pi]])
    a, b = edges[:-1], edges[1:]
    mid, rad = 0.5 * (a + b), 0.5 * (b - a)
    nodes = (mid[:, None] + rad[:, None] * _GL_NODES[None, :]).ravel()
    weights = (rad[:, None] * _GL_WEIGHTS[None, :]).ravel()
    return nodes, weights


def _integral_rep(nu: float, z: np.ndarray, chunk: int = 2048) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    p = 1.0 / (1.0 - nu)
    a0 = (1.0 - nu) * nu ** (nu * p)  # A(0+), the minimum of A on (0, pi)
    out = np.zeros_like(z)
    # exp(-z^p A(0+)) bounds the integral; skip arguments where it underflows
    with np.errstate(over="ignore", divide="ignore"):
        live = (z ** p * a0 - nu * p * np.log(z)) < 760.0
    idx = np.flatnonzero(live)
    for start in range(0, idx.size, chunk):
        sel = idx[start:start + chunk]
        out[sel] = _integral_rep_block(nu, z[sel])
    return out


def _integral_rep_block(nu: float, z: np.ndarray) -> np.ndarray:
    p = 1.0 / (1.0 - nu)
    a0 = (1.0 - nu) * nu ** (nu * p)
    nodes, weights = _graded_rule()
    g = _kanter_log_excess(nu, nodes)[None, :]
    c = z[:, None] ** p
    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        integrand = a0 * np.exp(g - c * a0 * np.expm1(g))
    integrand = np.where(np.isfinite(integrand), integrand, 0.0)
    total = integrand @ weights
    with np.errstate(divide="ignore", under="ignore"):
        logval = nu * p * np.log(z) - math.log(math.pi * (1.0 - nu)) - c[:, 0] * a0 + np.log(total)
        out = np.exp(logval)
    return np.where(total > 0.0, out, 0.0)


def _integral_rep_mp(nu: float, z: float, dps: int = 30) -> float:
    """Integral branch evaluated by mpmath tanh-sinh quadrature (checking only)."""
    with mpmath.workdps(dps):
        nu_m, z_m = mpmath.mpf(nu), mpmath.mpf(z)
        p = 1 / (1 - nu_m)
        a0 = (1 - nu_m) * nu_m ** (nu_m * p)
        c = z_m ** p

        def amp(phi):
            return (mpmath.sin(nu_m * phi) / mpmath.sin(phi)) ** p * mpmath.sin((1 - nu_m) * phi) / mpmath.sin(nu_m * phi)

        def f(phi):
            a = amp(phi)
            return a * mpmath.exp(-c * (a - a0))

        w = min(mpmath.pi / 2, 1 / mpmath.sqrt(c)) if c > 0 else mpmath.pi / 2
        pts = [0, w / 8, w, 4 * w, mpmath.pi / 2, mpmath.pi] if w < mpmath.pi / 8 else [0, mpmath.pi / 2, mpmath.pi]
        pts = sorted(set(pts))
        val = mpmath.quad(f, pts)
        return float(z_m ** (nu_m * p) / (mpmath.pi * (1 - nu_m)) * mpmath.exp(-c * a0) * val)


# ---------------------------------------------------------------------------
# arbitrary-precision series


def _series_mp(nu: float, z: float, dps: int | None = None, max_terms: int = 4000) -> float:
    """Sum the series with mpmath, raising precision until cancellation is covered."""
    if dps is None:
        dps = 30
    for _ in range(6):
        with mpmath.workdps(dps):
            nu_m, z_m = mpmath.mpf(nu), mpmath.mpf(z)
            pf = mpmath.mpf(1)
            s = mpmath.mpf(0)
            absum = mpmath.mpf(0)
            runmax = mpmath.mpf(0)
            thresh = mpmath.mpf(10) ** (-dps)
            small = 0
            for n in range(max_terms):
                if n:
                    pf *= -z_m / n
                term = pf * mpmath.rgamma(1 - nu_m - nu_m * n)
                s += term
                absum += abs(term)
                runmax = max(runmax, abs(s))
                # two consecutive small terms: a lone tiny term may be a Gamma pole
                small = small + 1 if abs(term) < thresh * runmax else 0
                if small >= 2:
                    break
            else:
                raise NonConvergence(f"series for M_{nu}({z}) did not converge in {max_terms} terms")
            if s > 0 and absum * thresh <= 1e-17 * s:
                return float(s)
            cond = absum / abs(s) if s != 0 else mpmath.mpf(10) ** dps
            dps = int(dps + float(mpmath.log10(cond)) + 10)
    raise NonConvergence(f"extended-precision series for M_{nu}({z}) did not settle")


@lru_cache(maxsize=512)
def switch_radius(nu: float) -> float:
    """Largest z (on a 0.01 grid) below which the double series meets its target.

    Beyond it ``mwright_eval`` goes straight to the integral branch.
    """
    z = np.arange(0.0, 40.0, 0.01)
    _, ok = _series_double(float(nu), z)
    bad = np.flatnonzero(~ok)
    return float(z[bad[0] - 1]) if bad.size else float(z[-1])


# ---------------------------------------------------------------------------
# public API


def mwright_eval(nu, z, method: str = "auto"):
    """Evaluate M_nu(z) for 0 < nu < 1 and z >= 0.

    ``method`` is ``"auto"`` (double series where well conditioned,
    integral representation elsewhere), ``"series"``, ``"integral"`` or
    ``"mpseries"`` (arbitrary precision; slow, for checking).
    Scalars in, float out; arrays in, arrays out.
    """
    nu = _check_pointwise(nu)
    z_arr = np.asarray(z, dtype=float)
    scalar = z_arr.ndim == 0
    flat = np.atleast_1d(z_arr).ravel()
    if np.any(~(flat >= 0.0)):
        raise DomainError("M-Wright argument must be a nonnegative real")

    if method == "auto":
        out = np.empty_like(flat)
        near = flat <= switch_radius(nu)
        idx = np.flatnonzero(near)
        for start in range(0, idx.size, 2048):
            sel = idx[start:start + 2048]
            val, ok = _series_double(nu, flat[sel])
            out[sel] = val
            near[sel[~ok]] = False
        out[~near] = _integral_rep(nu, flat[~near])
    elif method == "series":
        out, ok = _series_double(nu, flat)
        if not ok.all():
            raise NonConvergence(f"double-precision series for M_{nu} is unreliable at z={flat[~ok][0]}")
    elif method == "integral":
        out = np.empty_like(flat)
        pos = flat > 0
        out[~pos] = special.rgamma(1.0 - nu)
        out[pos] = _integral_rep(nu, flat[pos])
    elif method == "mpseries":
        out = np.array([_series_mp(nu, float(v)) for v in flat])
    else:
        raise ValueError(f"unknown method {method!r}")

    out = np.where(flat == 0.0, special.rgamma(1.0 - nu), out)
    out = out.reshape(np.shape(z_arr)) if not scalar else out[0]
    return float(out) if scalar else out


def mwright_moment(nu, delta: float) -> float:
    """Absolute moment int_0^inf tau^delta M_nu(tau) dtau = Gamma(delta+1)/Gamma(nu delta+1).

    Valid for delta > -1; nu = 1 (Dirac at tau = 1) gives 1.
    """
    order = _order(nu)
    delta = float(delta)
    if not delta > -1.0:
        raise DomainError(f"moment order must exceed -1, got {delta}")
    if order.is_dirac:
        return 1.0
    return math.exp(math.lgamma(delta + 1.0) - math.lgamma(order.nu * delta + 1.0))


def mwright_tail_cut(nu, tail_eps: float) -> float:
    """Smallest tau_max such that Markov's bound on the mass beyond it is < tail_eps.

    Uses P(tau > T) <= E[tau^k] / T^k minimised over integer k.
    """
    order = _order(nu)
    if order.is_dirac:
        return 1.0
    best = math.inf
    for k in range(1, 200):
        cut = (mwright_moment(order, k) / tail_eps) ** (1.0 / k)
        if cut > best:
            break
        best = cut
    return best


@dataclass(frozen=True)
class MWrightTable:
    """Tabulated density and trapezoidal CDF of M_nu on [0, tail_cut]."""

    nu: WrightOrder
    nodes: np.ndarray
    pdf_values: np.ndarray
    cdf_values: np.ndarray
    tail_cut: float
    tail_eps: float = field(default=1e-6)

    def cdf(self, tau):
        """Piecewise-linear interpolation of the tabulated CDF."""
        return np.interp(tau, self.nodes, self.cdf_values, left=0.0, right=self.cdf_values[-1])

    def ppf(self, u):
        """Inverse CDF by linear interpolation; u is clipped into the tabulated range."""
        u = np.asarray(u, dtype=float)
        cdf = self.cdf_values
        # drop flat stretches so the inverse is single valued
        keep = np.concatenate([[True], np.diff(cdf) > 0])
        return np.interp(u * cdf[-1], cdf[keep], self.nodes[keep])

    def moment(self, delta: float) -> float:
        return float(integrate.trapezoid(self.nodes ** delta * self.pdf_values, self.nodes))


def mwright_build_table(nu, tail_eps: float = 1e-6, n_nodes: int = 2048) -> MWrightTable:
    """Tabulate M_nu on [0, tail_cut] with nodes packed toward tau = 0."""
    nu_f = _check_pointwise(nu)
    if not 0.0 < tail_eps <= 1e-3:
        raise DomainError("tail_eps must lie in (0, 1e-3]")
    if n_nodes < 64:
        raise DomainError("n_nodes must be at least 64")
    return _build_table(nu_f, float(tail_eps), int(n_nodes))


@lru_cache(maxsize=64)
def _build_table(nu: float, tail_eps: float, n_nodes: int) -> MWrightTable:
    cut = mwright_tail_cut(nu, tail_eps)
    # expm1 grading: spacing grows by e^k from 0 to the cut
    u = np.linspace(0.0, 1.0, n_nodes)
    k = 2.0
    nodes = cut * np.expm1(k * u) / math.expm1(k)
    pdf = np.maximum(mwright_eval(nu, nodes), 0.0)
    cdf = integrate.cumulative_trapezoid(pdf, nodes, initial=0.0)
    for arr in (nodes, pdf, cdf):
        arr.setflags(write=False)
    return MWrightTable(WrightOrder(nu), nodes, pdf, cdf, cut, tail_eps)


def mwright_compose(lam, ell, xi: float, t: float, tol: float = 1e-10) -> float:
    """Right-hand side of the M-Wright composition law.

    Returns t^-ell * int_0^inf M_lam(xi / tau^lam) M_ell(tau / t^ell) dtau / tau^lam,
    which should equal t^-nu M_nu(xi / t^nu) with nu = lam * ell.  An
    ``ell`` of 1 collapses the integral onto tau = t.
    """
    lam_f = _check_pointwise(lam)
    ell_o = _order(ell)
    xi, t = float(xi), float(t)
    if xi < 0 or t <= 0:
        raise DomainError("need xi >= 0 and t > 0")
    if ell_o.is_dirac:
        return t ** -lam_f * mwright_eval(lam_f, xi / t ** lam_f)
    ell_f = ell_o.nu
    scale = t ** ell_f

    def integrand(s):
        # tau = scale * s;  dtau / tau^lam = scale^(1-lam) ds / s^lam
        tau = scale * s
        return mwright_eval(lam_f, xi / tau ** lam_f) * mwright_eval(ell_f, s) * s ** -lam_f

    upper = mwright_tail_cut(ell_f, 1e-16)
    val, _ = gk_quad(integrand, 0.0, upper, tol=tol, breakpoints=[0.5, 1.0, 2.0])
    return scale ** (1.0 - lam_f) * val / t ** ell_f
