"""Self-checks of the library against analytic identities.

Each check returns a CheckResult; ``run_checks`` collects them for the
``verify`` command and the acceptance tests.  ``fault`` names one check
whose reference value is deliberately corrupted (a wrong Gamma argument
where the reference has one, otherwise a 0.1% scale error), so that the
harness itself can be shown to fail loudly.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import ekops, greenfn, mwright, sampler, solver
from ._quad import gk_quad

__all__ = ["CheckResult", "CHECKS", "run_checks", "ks_distance", "format_report"]

SEED = 20240601


@dataclass
class CheckResult:
    key: str
    title: str
    passed: bool
    detail: str
    seconds: float = 0.0
    time_limit: Optional[float] = None

    @property
    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        limit = f" (limit {self.time_limit:g} s)" if self.time_limit is not None else ""
        return f"[{status}] {self.key}: {self.title} -- {self.detail} [{self.seconds:.2f} s{limit}]"


def ks_distance(sample: np.ndarray, cdf_values_sorted: np.ndarray) -> float:
    """Kolmogorov-Smirnov statistic of a sorted sample against its model CDF values."""
    n = sample.size
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - cdf_values_sorted), np.max(cdf_values_sorted - (i - 1) / n)))


class _Ctx:
    def __init__(self, key: str, fault: Optional[str]):
        self.faulty = fault == key

    def gamma(self, x: float, shift: float = 1.0) -> float:
        """Gamma at x, or at x + shift when this check is the injected fault."""
        return math.gamma(x + shift if self.faulty else x)

    def scale(self, v):
        return v * (1.001 if self.faulty else 1.0)


# ---------------------------------------------------------------------------
# individual checks; each returns (passed, detail)


def _gaussian_case(ctx: _Ctx, level: str):
    z = np.arange(0, 501) * 0.01
    exact = np.exp(-z * z / 4.0) / ctx.gamma(0.5)
    got = mwright.mwright_eval(0.5, z)
    err = float(np.max(np.abs(got / exact - 1.0)))
    return err < 1e-12, f"max relative error {err:.2e} (< 1e-12) over z in [0, 5]"


def _composition(ctx: _Ctx, level: str):
    vals = (0.4, 0.5, 0.6)
    worst = 0.0
    for lam in vals:
        for ell in vals:
            nu = lam * ell
            for xi in (0.5, 1.0, 2.0):
                for t in (0.5, 1.0, 2.0):
                    direct = ctx.scale(t ** (-nu) * mwright.mwright_eval(nu, xi * t ** (-nu)))
                    worst = max(worst, abs(mwright.mwright_compose(lam, ell, xi, t) - direct))
    return worst < 1e-6, f"max abs difference {worst:.2e} (< 1e-6) over 81 cases"


def _moments(ctx: _Ctx, level: str):
    worst = 0.0
    coef_err = 0.0
    for beta in (0.25, 0.5, 0.75):
        cut = mwright.mwright_tail_cut(beta, 1e-17)
        for delta in (0, 1, 2):
            q, _ = gk_quad(lambda s: s ** delta * mwright.mwright_eval(beta, s), 0.0, cut,
                           tol=1e-13, breakpoints=[0.5, 1.0, 2.0, 4.0])
            oracle = math.gamma(delta + 1.0) / ctx.gamma(beta * delta + 1.0)
            worst = max(worst, abs(q / oracle - 1.0))
        coef_err = max(coef_err, abs(mwright.mwright_moment(beta, 1.0) * ctx.gamma(beta + 1.0) - 1.0))
    ok = worst < 1e-6 and coef_err < 1e-12
    return ok, f"max relative error {worst:.2e} (< 1e-6); first moment vs 1/Gamma(beta+1) {coef_err:.1e}"


def _ek_identities(ctx: _Ctx, level: str):
    # (a) eigenrelation on a 3x3x3x3 grid
    worst_a = 0.0
    for g in (0.0, 0.5, 1.0):
        for mu in (0.5, 1.0, 2.5):
            for eta in (0.5, 1.0, 2.0):
                p = ekops.EKParams(g, mu, eta)
                for c in (0.0, 0.7, 2.0):
                    t = 1.7
                    got = ekops.ek_integral(p, ekops.SampledFunction.power(c), t, rtol=1e-10)
                    ref = math.gamma(g + 1 + c / eta) / ctx.gamma(g + mu + 1 + c / eta) * t ** c
                    worst_a = max(worst_a, abs(got / ref - 1.0))
    # (b) Riemann-Liouville route, 20 random (mu, t)
    rng = np.random.default_rng(SEED)
    phis = [lambda s: np.ones_like(s), lambda s: s, lambda s: s * s, lambda s: np.exp(-s)]
    worst_b = 0.0
    for mu, t in zip(rng.uniform(0.1, 3.0, 20), rng.uniform(0.1, 3.0, 20)):
        for phi in phis:
            a = ekops.ek_integral(ekops.EKParams(0.0, mu, 1.0), phi, t, rtol=1e-12)
            b = ctx.scale(t ** (-mu) * ekops.rl_integral(mu, phi, t, rtol=1e-12))
            worst_b = max(worst_b, abs(a - b) / max(abs(b), 1e-300))
    # (c) mu = 0 derivative is the identity
    exact_c = True
    for g, eta in ((0.0, 1.0), (0.7, 0.5), (-0.3, 2.0)):
        for phi in phis:
            for t in (0.3, 1.0, 2.5):
                exact_c &= ekops.ek_derivative(ekops.EKParams(g, 0.0, eta), phi, t) == float(phi(np.asarray(t)))
    ok = worst_a < 1e-7 and worst_b < 1e-9 and exact_c
    return ok, (f"(a) eigenrelation {worst_a:.1e} (< 1e-7); (b) RL route {worst_b:.1e} (< 1e-9); "
                f"(c) identity {'exact' if exact_c else 'NOT exact'}")


SOLVER_CASES = {(1.0, 1.0): 1e-3, (0.6, 0.6): 5e-3, (1.4, 1.0): 5e-3, (0.8, 0.5): 5e-3}
ORDER_CASES = ((1.0, 1.0), (0.6, 0.6), (1.4, 0.8))
ORDER_NT = (5, 9, 17, 33)


def _benchmark_config(alpha, beta, nt=200, nx=401, t0=None):
    p = greenfn.DiffusionParams(alpha, beta)
    grid = solver.Grid1D(-10.0, 10.0, nx)
    if t0 is None:
        t0 = max(0.01, solver.min_resolved_t0(p, grid))
    return solver.SolverConfig(p, grid, t0=t0, t_end=1.0, nt=nt)


def _solver(ctx: _Ctx, level: str):
    cases = SOLVER_CASES if level == "full" else {(1.0, 1.0): 1e-3, (0.8, 0.5): 5e-3}
    ok = True
    parts = []
    for (a, b), limit in cases.items():
        cfg = _benchmark_config(a, b)
        f = solver.solve(cfg)
        l1 = f.l1_error(ctx.scale(greenfn.ggbm_green(cfg.params, f.x, 1.0)))
        var = float(np.max(np.abs(f.variance / greenfn.green_variance(cfg.params, f.times) - 1.0)))
        ok &= l1 < limit and var < 0.01
        parts.append(f"({a:g},{b:g}) L1 {l1:.1e}<{limit:g} var {var:.1e}")
    if level == "full":
        for a, b in ORDER_CASES:
            errs = []
            for nt in ORDER_NT:
                cfg = _benchmark_config(a, b, nt=nt, nx=1601, t0=0.03)
                f = solver.solve(cfg)
                errs.append(f.l1_error(greenfn.ggbm_green(cfg.params, f.x, 1.0)))
            orders = [math.log2(errs[i] / errs[i + 1]) for i in range(len(errs) - 1)]
            ok &= min(orders) >= 0.9
            parts.append(f"({a:g},{b:g}) dt orders " + "/".join(f"{o:.2f}" for o in orders))
    return ok, "; ".join(parts)


SAMPLER_CASES = ((1.0, 1.0), (0.6, 0.4), (1.5, 0.8))


def _sampler(ctx: _Ctx, level: str):
    n = 20000 if level == "full" else 4000
    cases = SAMPLER_CASES if level == "full" else ((0.6, 0.4),)
    t = np.linspace(0.0, 1.0, 33)
    crit = 1.63 / math.sqrt(n)
    # the slope and amplitude bands are set for 2e4 paths; smaller runs widen them by the CLT factor
    band = 0.05 * math.sqrt(20000 / n)
    ok = True
    parts = []
    for a, b in cases:
        p = greenfn.DiffusionParams(a, b)
        ens = sampler.ggbm_paths(sampler.EnsembleConfig(p, t, n, SEED))
        st = sampler.ensemble_stats(ens, keep=False)
        x = np.sort(ens.paths[:, -1])
        ks = ks_distance(x, greenfn.ggbm_cdf(p, x, 1.0))
        amp = st.amplitude(a) / (2.0 / ctx.gamma(b + 1.0))
        amp_err = float(np.max(np.abs(amp - 1.0)))
        slope_err = abs(st.loglog_slope - a)
        ok &= ks < crit and slope_err <= band and amp_err <= band
        parts.append(f"({a:g},{b:g}) KS {ks:.4f}<{crit:.4f} slope {st.loglog_slope:.3f} amp {amp_err:.1%} (band {band:.0%})")
        if b == 1.0:
            fbm = sampler.fbm_paths(p.hurst, t, n, SEED)
            same = bool(np.all(ens.tau == 1.0)) and np.array_equal(fbm, ens.paths)
            ok &= same
            parts.append("beta=1 equals fBm" if same else "beta=1 differs from fBm")
    return ok, "; ".join(parts)


REDUCTION_CASES = ((0.6, 0.6), (1.4, 1.0), (1.0, 1.0))
REDUCTION_X = np.linspace(-4.0, 4.0, 33)
REDUCTION_T = (0.5, 1.0, 2.0)


def _reductions(ctx: _Ctx, level: str):
    worst = 0.0
    x = REDUCTION_X
    for t in REDUCTION_T:
        g = greenfn.ggbm_green(greenfn.DiffusionParams(0.6, 0.6), x, t)
        worst = max(worst, float(np.max(np.abs(g - greenfn.time_fractional_green(0.6, x, t)))))
        g = greenfn.ggbm_green(greenfn.DiffusionParams(1.4, 1.0), x, t)
        worst = max(worst, float(np.max(np.abs(g - greenfn.stretched_gaussian_green(1.4, x, t)))))
        g = greenfn.ggbm_green(greenfn.DiffusionParams(1.0, 1.0), x, t)
        worst = max(worst, float(np.max(np.abs(g - ctx.scale(greenfn.gaussian_green(x, t))))))
    return worst < 1e-10, f"max pointwise difference {worst:.1e} (< 1e-10) on 3 x 33 x 3 points"


def _dual(ctx: _Ctx, level: str):
    worst = 0.0
    for a, b in REDUCTION_CASES:
        p = greenfn.DiffusionParams(a, b)
        for t in REDUCTION_T:
            direct = ctx.scale(greenfn.ggbm_green(p, REDUCTION_X, t))
            mix = np.array([greenfn.green_mixture(p, xi, t) for xi in REDUCTION_X])
            worst = max(worst, float(np.max(np.abs(direct - mix))))
    return worst < 1e-6, f"max |direct - mixture| {worst:.1e} (< 1e-6)"


def _cli_reproducible(ctx: _Ctx, level: str):
    import tempfile
    from pathlib import Path

    from . import cli

    with tempfile.TemporaryDirectory() as tmp:
        blobs = []
        for run in ("a", "b"):
            out = Path(tmp) / run
            code = cli.main(["simulate", "--alpha", "0.6", "--beta", "0.4", "--paths", "500",
                             "--nodes", "17", "--seed", "7", "--out", str(out), "--quiet"])
            if code != 0:
                return False, f"simulate exited with {code}"
            blobs.append({f.name: f.read_bytes() for f in sorted(out.glob("*.csv"))})
        same = blobs[0] == blobs[1] and bool(blobs[0])
        if ctx.faulty:
            same = False
    return same, f"{len(blobs[0])} CSV files byte-identical across two runs" if same else "CSV outputs differ"


@dataclass(frozen=True)
class _Check:
    key: str
    title: str
    fn: Callable
    time_limit: float
    levels: tuple = ("quick", "full")


CHECKS = (
    _Check("c1_gaussian_case", "M-Wright order 1/2 against the Gaussian", _gaussian_case, 1.0),
    _Check("c2_composition", "composition formula against direct evaluation", _composition, 30.0),
    _Check("c3_moments", "moments of M_beta against Gamma ratios", _moments, 5.0),
    _Check("c4_ek_identities", "Erdelyi-Kober operator identities", _ek_identities, 10.0),
    _Check("c5_solver", "solver against the analytic Green function", _solver, 120.0),
    _Check("c6_sampler", "sampled paths against the one-point law", _sampler, 180.0),
    _Check("c7_reductions", "closed-form limits against the general Green function", _reductions, 1.0),
    _Check("c8_dual_representation", "direct Green function against the Gaussian mixture", _dual, 30.0),
    _Check("c9_cli_reproducible", "simulate output is reproducible byte for byte", _cli_reproducible, 60.0,
           ("full",)),
)


def run_checks(level: str = "quick", fault: Optional[str] = None, only=None, report=None) -> list:
    """Run the checks for ``level`` (quick or full), optionally corrupting one.

    Exceptions inside a check count as failures.  ``report`` is called
    with each result as it completes.
    """
    if level not in ("quick", "full"):
        raise ValueError("level must be 'quick' or 'full'")
    keys = {c.key for c in CHECKS}
    if fault is not None and fault not in keys:
        raise ValueError(f"unknown check {fault!r}; choose from {sorted(keys)}")
    results = []
    for chk in CHECKS:
        if level not in chk.levels or (only is not None and chk.key not in only):
            continue
        start = time.perf_counter()
        try:
            passed, detail = chk.fn(_Ctx(chk.key, fault), level)
        except Exception as exc:  # a crashing check is a failed check
            passed, detail = False, f"raised {type(exc).__name__}: {exc}"
        secs = time.perf_counter() - start
        limit = chk.time_limit if level == "full" else None
        if limit is not None and secs > limit:
            passed, detail = False, detail + f"; too slow ({secs:.1f} s > {limit:g} s)"
        res = CheckResult(chk.key, chk.title, bool(passed), detail, secs, limit)
        results.append(res)
        if report is not None:
            report(res)
    return results


def format_report(results) -> str:
    lines = [r.line for r in results]
    n_fail = sum(not r.passed for r in results)
    lines.append(f"{len(results) - n_fail} passed, {n_fail} failed")
    return "\n".join(lines)
