"""Finite-difference solver for the ggBm governing integral equation.

In stretched time T = t^(alpha/beta) the equation

    P(x, t) = P0(x) + (alpha/beta)/Gamma(beta) int_0^t tau^(alpha/beta-1)
              (t^(alpha/beta) - tau^(alpha/beta))^(beta-1) P_xx(x, tau) dtau

becomes P(T) = P0 + J^beta P_xx with the Abel kernel (T - u)^(beta-1)/Gamma(beta).
Time levels are uniform in T.  On each cell [T_k, T_{k+1}] the Laplacian is
frozen at its right-end value and the kernel is integrated exactly, so
level n solves one tridiagonal system (the newest level is implicit).

A Dirac initial condition is replaced by the exact Green function at a
small t0.  For beta < 1 the memory of [0, t0] still acts on later levels;
it is added as a history term built from the exact Green function,

    H_n = L[ int_0^T0 ((T_n - u)^(beta-1) - (T0 - u)^(beta-1)) / Gamma(beta) G(u) du ],

integrated with linear interpolation of G on a geometric u grid.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import interpolate, linalg, special

from .ekops import EKParams, SampledFunction, ek_derivative
from .errors import (
    DomainError,
    InsufficientHistory,
    ParamMismatch,
    ResolutionError,
    SingularityError,
)
from .greenfn import (
    DiffusionParams,
    ggbm_cell_average,
    ggbm_green,
    green_variance,
    stretched_gaussian_green,
    time_fractional_green,
    gaussian_green,
)

__all__ = [
    "Grid1D",
    "SolverConfig",
    "SolutionField",
    "solve",
    "solve_reduced",
    "ek_residual",
    "abel_cell_weights",
    "default_grid",
    "min_resolved_t0",
    "exact_profile",
]

log = logging.getLogger(__name__)

IC_MODES = ("analytic_green_at_t0", "custom_P0")
SCHEMES = ("linear", "constant")
SAMPLINGS = ("cell", "point")
MESHES = ("uniform", "graded")
REDUCED_KINDS = ("time_fractional", "stretched_gaussian", "brownian")
_MIN_PEAK_NODES = 8


@dataclass(frozen=True)
class Grid1D:
    x_min: float
    x_max: float
    nx: int

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise DomainError("grid needs x_min < x_max")
        if int(self.nx) < 3:
            raise DomainError("grid needs at least 3 nodes")
        object.__setattr__(self, "nx", int(self.nx))

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.nx - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.nx)


@dataclass(frozen=True)
class SolverConfig:
    """Everything ``solve`` needs.

    ``nt`` counts recorded time levels, t0 and t_end included, spaced
    uniformly in stretched time.  With ``ic_mode="custom_P0"`` the
    callable ``p0`` is the state at t = 0 and ``t0`` must be 0.
    """

    params: DiffusionParams
    grid: Grid1D
    t0: float = 0.01
    t_end: float = 1.0
    nt: int = 200
    ic_mode: str = "analytic_green_at_t0"
    p0: Optional[Callable] = None
    history_nodes: int = 1600
    mesh: str = "uniform"
    sampling: str = "cell"
    scheme: str = "linear"
    grading: float = 2.0

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise DomainError(f"scheme must be one of {SCHEMES}")
        if self.sampling not in SAMPLINGS:
            raise DomainError(f"sampling must be one of {SAMPLINGS}")
        if self.mesh not in MESHES:
            raise DomainError(f"mesh must be one of {MESHES}")
        if self.ic_mode not in IC_MODES:
            raise DomainError(f"ic_mode must be one of {IC_MODES}")
        if int(self.nt) < 2:
            raise DomainError("nt must be at least 2")
        object.__setattr__(self, "nt", int(self.nt))
        if self.ic_mode == "analytic_green_at_t0":
            if not self.t0 > 0:
                raise DomainError("analytic initial condition needs t0 > 0")
        else:
            if self.p0 is None:
                raise DomainError("custom_P0 mode needs p0")
            if self.t0 != 0:
                raise DomainError("custom_P0 data is the state at t = 0; set t0 = 0")
        if not self.t_end > self.t0:
            raise DomainError("need t0 < t_end")

    @property
    def stretch(self) -> float:
        return self.params.alpha / self.params.beta


@dataclass
class SolutionField:
    config: SolverConfig
    times: np.ndarray
    values: np.ndarray
    laplacians: np.ndarray
    mass: np.ndarray
    variance: np.ndarray
    history: Optional[tuple] = field(default=None, repr=False)

    @property
    def x(self) -> np.ndarray:
        return self.config.grid.x

    @property
    def final(self) -> np.ndarray:
        return self.values[-1]

    @property
    def mass_drift(self) -> np.ndarray:
        return self.mass - self.mass[0]

    def l1_error(self, reference: np.ndarray, level: int = -1) -> float:
        return float(self.config.grid.dx * np.sum(np.abs(self.values[level] - reference)))


# ---------------------------------------------------------------------------
# helpers


def laplacian(f: np.ndarray, dx: float) -> np.ndarray:
    """Central second difference along the last axis; zero at the two boundary nodes."""
    out = np.zeros_like(f)
    out[..., 1:-1] = (f[..., :-2] - 2.0 * f[..., 1:-1] + f[..., 2:]) / (dx * dx)
    return out


def abel_cell_weights(beta: float, T: float, a, b):
    """Exact integrals of (T-u)^(beta-1)/Gamma(beta) against 1 and (u-a)/(b-a) over [a, b].

    Returns (m0, m1).  Written through the regularised incomplete beta
    function so that thin cells far from T keep full relative precision.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    c = T - a
    h = b - a
    r = np.clip(h / c, 0.0, 1.0)
    m0 = c ** beta * special.betainc(1.0, beta, r) / math.gamma(beta + 1.0)
    m1 = c ** (beta + 1.0) * special.betainc(2.0, beta, r) / math.gamma(beta + 2.0) / h
    return m0, m1


def level_weights(beta: float, T: np.ndarray, scheme: str = "linear") -> np.ndarray:
    """Weights of J^beta f(T[-1]) ~ sum_k w_k f(T[k]) over levels T[0..n].

    ``constant`` freezes f at the right end of each cell (implicit Euler
    for beta = 1); ``linear`` interpolates f linearly on each cell
    (trapezoidal rule for beta = 1).  Both integrate the kernel exactly.
    """
    m0, m1 = abel_cell_weights(beta, T[-1], T[:-1], T[1:])
    w = np.zeros(T.size)
    if scheme == "constant":
        w[1:] = m0
    else:
        w[:-1] += m0 - m1
        w[1:] += m1
    return w


def default_grid(params: DiffusionParams, t_end: float, nx: int = 401, factor: float = 6.0) -> Grid1D:
    """Symmetric grid with half-width factor * sqrt(<x^2>(t_end))."""
    half = factor * math.sqrt(green_variance(params, t_end))
    return Grid1D(-half, half, nx)


def _peak_nodes(params: DiffusionParams, grid: Grid1D, t0: float) -> int:
    prof = ggbm_green(params, grid.x, t0)
    return int(np.count_nonzero(prof >= math.exp(-2.0) * prof.max()))


def min_resolved_t0(params: DiffusionParams, grid: Grid1D) -> float:
    """Smallest t0 whose Green profile covers at least 8 nodes above e^-2 of its peak."""
    lo, hi = 1e-12, 1.0
    while _peak_nodes(params, grid, hi) < _MIN_PEAK_NODES:
        hi *= 2.0
    for _ in range(80):
        mid = math.sqrt(lo * hi)
        if _peak_nodes(params, grid, mid) >= _MIN_PEAK_NODES:
            hi = mid
        else:
            lo = mid
    return hi


def exact_profile(params: DiffusionParams, x, t):
    """Dedicated closed form for the named limits, the general formula otherwise."""
    kind = params.kind
    if kind == "brownian":
        return gaussian_green(x, t)
    if kind == "fbm":
        return stretched_gaussian_green(params.alpha, x, t)
    if kind == "grey":
        return time_fractional_green(params.beta, x, t)
    return ggbm_green(params, x, t)


def _green_in_T(config: SolverConfig, x: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Sampled Green function at stretched times u (rows): point values or cell means."""
    params = config.params
    t = (u ** (1.0 / config.stretch))[:, None]
    if config.sampling == "cell":
        return ggbm_cell_average(params, x[None, :], config.grid.dx, t)
    return ggbm_green(params, x[None, :], t)


def _green_xx(params: DiffusionParams, x: np.ndarray, t: np.ndarray, h: float = 1e-3) -> np.ndarray:
    """d^2G/dx^2 at x != 0 for times t (rows), from G = t^(-a/2) g(x t^(-a/2)).

    g'' is a 4th-order central difference in the similarity variable,
    where the profile has unit width and a fixed step is safe.
    """
    from .mwright import mwright_eval

    s = np.asarray(t, dtype=float)[:, None] ** (-params.alpha / 2.0)
    y = np.abs(x)[None, :] * s
    nu = params.beta / 2.0
    f = lambda z: 0.5 * mwright_eval(nu, np.abs(z))
    g2 = (-f(y - 2 * h) + 16 * f(y - h) - 30 * f(y) + 16 * f(y + h) - f(y + 2 * h)) / (12 * h * h)
    return s ** 3 * g2


def _history(config: SolverConfig, T: np.ndarray, x: np.ndarray):
    """History sources L^-1-free part: rows Omega_n @ G for every level n."""
    beta = config.params.beta
    T0 = T[0]
    m = config.history_nodes
    u = T0 * np.concatenate([np.geomspace(1e-14, 1.0, m)])
    u[-1] = T0
    G = _green_in_T(config, x, u)
    a, b = u[:-1], u[1:]
    # weights of (T0 - u)^(beta-1) term, fixed
    m0_0, m1_0 = abel_cell_weights(beta, T0, a, b)
    omega = np.zeros((T.size, u.size))
    for n in range(1, T.size):
        m0, m1 = abel_cell_weights(beta, T[n], a, b)
        d0, d1 = m0 - m0_0, m1 - m1_0
        omega[n, :-1] += d0 - d1
        omega[n, 1:] += d1
    if not np.all(np.isfinite(omega)):
        raise SingularityError("history weights are not finite")
    return omega @ G, (u, G)


def stretched_levels(config: SolverConfig) -> np.ndarray:
    """Time levels in T = t^(alpha/beta), t0 and t_end included."""
    eta = config.stretch
    T0, Tend = config.t0 ** eta, config.t_end ** eta
    u = np.linspace(0.0, 1.0, config.nt)
    if config.mesh == "uniform" or T0 == 0.0:
        T = T0 + (Tend - T0) * u if config.mesh == "uniform" else Tend * u ** config.grading
    else:
        T = T0 * (Tend / T0) ** u
    T[0], T[-1] = T0, Tend
    return T


# ---------------------------------------------------------------------------
# solver


def solve(config: SolverConfig) -> SolutionField:
    p = config.params
    grid = config.grid
    x, dx = grid.x, grid.dx
    beta = p.beta
    eta = config.stretch

    T = stretched_levels(config)
    times = T ** (1.0 / eta)
    times[0], times[-1] = config.t0, config.t_end

    if config.ic_mode == "analytic_green_at_t0":
        if _peak_nodes(p, grid, config.t0) < _MIN_PEAK_NODES:
            raise ResolutionError(
                f"Green profile at t0={config.t0} spans fewer than {_MIN_PEAK_NODES} nodes; "
                f"use t0 >= {min_resolved_t0(p, grid):.3g} or a finer grid"
            )
        p_init = _green_in_T(config, x, np.array([config.t0 ** eta]))[0]
        reach = 6.0 * math.sqrt(green_variance(p, config.t_end))
        if max(-grid.x_min, grid.x_max) < reach:
            log.warning("domain half-width below 6 standard deviations at t_end (%.3g)", reach)
    else:
        p_init = np.asarray(config.p0(x), dtype=float) * np.ones_like(x)
    p_init = p_init.copy()
    p_init[0] = p_init[-1] = 0.0

    history = None
    source = np.zeros((config.nt, x.size))
    if config.ic_mode == "analytic_green_at_t0" and beta < 1.0:
        src, history = _history(config, T, x)
        source = laplacian(src, dx)

    nt, nx = config.nt, x.size
    values = np.empty((nt, nx))
    lap = np.empty((nt, nx))
    values[0] = p_init
    lap[0] = laplacian(p_init, dx)

    inv_dx2 = 1.0 / (dx * dx)
    n_int = nx - 2
    norm = math.gamma(beta + 1.0)
    for n in range(1, nt):
        w = level_weights(beta, T[: n + 1], config.scheme)
        if not np.all(np.isfinite(w)):
            raise SingularityError(f"memory weights not finite at level {n}")
        # telescoping: the weights sum to (T_n - T_0)^beta / Gamma(beta + 1)
        expect = (T[n] - T[0]) ** beta / norm
        assert abs(w.sum() - expect) <= 1e-10 * expect, "memory weights do not telescope"
        rhs = p_init + source[n] + w[:-1] @ lap[:n]
        wn = w[-1]
        ab = np.empty((3, n_int))
        ab[0, :] = -wn * inv_dx2
        ab[1, :] = 1.0 + 2.0 * wn * inv_dx2
        ab[2, :] = -wn * inv_dx2
        new = np.zeros(nx)
        new[1:-1] = linalg.solve_banded((1, 1), ab, rhs[1:-1])
        values[n] = new
        lap[n] = laplacian(new, dx)

    if not np.all(np.isfinite(values)):
        raise SingularityError("solution contains non-finite values")
    mass = dx * values.sum(axis=1)
    variance = dx * (values * x[None, :] ** 2).sum(axis=1)
    if config.ic_mode == "analytic_green_at_t0" and config.sampling == "cell":
        # cell means overstate the second moment of a smooth density by dx^2/12 per unit mass
        variance -= dx * dx / 12.0 * mass
    return SolutionField(config, times, values, lap, mass, variance, history)


def solve_reduced(kind: str, config: SolverConfig) -> SolutionField:
    """Run ``solve`` after checking (alpha, beta) matches the named limit."""
    a, b = config.params.alpha, config.params.beta
    checks = {
        "time_fractional": a == b and b < 1.0,
        "stretched_gaussian": b == 1.0,
        "brownian": a == 1.0 and b == 1.0,
    }
    if kind not in checks:
        raise DomainError(f"kind must be one of {REDUCED_KINDS}")
    if not checks[kind]:
        raise ParamMismatch(f"(alpha, beta) = ({a}, {b}) is not the {kind} case")
    return solve(config)


# ---------------------------------------------------------------------------
# residual of the differential (Erdelyi-Kober) form


def _laplacian_history(field: SolutionField, nodes: np.ndarray) -> Callable:
    """Vector-valued function t -> Laplacian at the given interior nodes.

    A cubic spline through the stored levels for t >= t0; before t0 the
    exact d^2G/dx^2 (analytic start; the discrete Laplacian of a nearly
    singular profile would misstate the memory) or the frozen first level
    (a start at t = 0 has no earlier times).
    """
    cfg = field.config
    p = cfg.params
    x, dx = cfg.grid.x, cfg.grid.dx
    times = field.times
    t0 = times[0]
    spline = interpolate.CubicSpline(times, field.laplacians[:, nodes], axis=0)
    early_spline = None
    if cfg.ic_mode == "analytic_green_at_t0":
        # d^2G/dx^2 is smooth in log t; tabulate once over 14 decades below t0
        log_t = np.linspace(math.log(t0) - 14.0 * math.log(10.0), math.log(t0), 400)
        early_spline = interpolate.CubicSpline(log_t, _green_xx(p, x[nodes], np.exp(log_t)), axis=0)
        log_t_min = log_t[0]

    def q(t):
        t = np.asarray(t, dtype=float)
        flat = t.ravel()
        out = np.empty((flat.size, nodes.size))
        late = flat >= t0
        if late.any():
            out[late] = spline(flat[late])
        early = ~late
        if early.any():
            if early_spline is not None:
                lt = np.log(flat[early])
                # below the table the profile has not reached the nodes yet
                out[early] = np.where((lt >= log_t_min)[:, None], early_spline(np.maximum(lt, log_t_min)), 0.0)
            else:
                out[early] = field.laplacians[0, nodes]
        return out.reshape(t.shape + (nodes.size,))

    return q


def ek_residual(field: SolutionField, level: int, nodes=None, rtol: float = 1e-5) -> float:
    """Max-norm residual of dP/dt = (alpha/beta) t^(alpha-1) D^{beta-1,1-beta}_{alpha/beta} P_xx.

    dP/dt is the second-order backward difference through levels
    level-2..level; the right side applies ``ek_derivative`` to the stored
    Laplacian history (exact Green function before t0).  ``nodes``
    restricts the check to a subset of interior indices; with an analytic
    start and beta < 1 the node at x = 0, where the initial point mass
    sits, is always left out.
    """
    n_levels = field.times.size
    if level < 0:
        level += n_levels
    if level < 2 or level >= n_levels:
        raise InsufficientHistory("ek_residual needs level >= 2 (three levels for dP/dt)")
    cfg = field.config
    alpha, beta = cfg.params.alpha, cfg.params.beta
    nx = cfg.grid.nx
    idx = np.arange(1, nx - 1) if nodes is None else np.asarray(nodes)
    if cfg.ic_mode == "analytic_green_at_t0" and beta < 1.0:
        # the point mass of the initial condition sits at x = 0
        idx = idx[np.abs(cfg.grid.x[idx]) > 0.5 * cfg.grid.dx]

    t2, t1, t0 = field.times[level], field.times[level - 1], field.times[level - 2]
    h1, h2 = t2 - t1, t1 - t0
    c2 = (2 * h1 + h2) / (h1 * (h1 + h2))
    c1 = -(h1 + h2) / (h1 * h2)
    c0 = h1 / (h2 * (h1 + h2))
    v = field.values
    dpdt = c2 * v[level, idx] + c1 * v[level - 1, idx] + c0 * v[level - 2, idx]

    if not np.any(field.values):
        return 0.0
    q = SampledFunction(_laplacian_history(field, idx))
    op = EKParams(beta - 1.0, 1.0 - beta, alpha / beta)
    rhs = alpha / beta * t2 ** (alpha - 1.0) * np.asarray(
        ek_derivative(op, q, t2, tol=1e-3, inner_rtol=rtol, breakpoints=(field.times[0],))
    )
    return float(np.max(np.abs(dpdt - rhs)))
