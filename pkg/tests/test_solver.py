import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from ekdiff import (
    DiffusionParams,
    DomainError,
    EKParams,
    Grid1D,
    InsufficientHistory,
    ParamMismatch,
    ResolutionError,
    SampledFunction,
    SolverConfig,
    ek_integral,
    ek_residual,
    ggbm_green,
    green_variance,
    solve,
    solve_reduced,
)
from ekdiff.solver import (
    abel_cell_weights,
    default_grid,
    exact_profile,
    laplacian,
    level_weights,
    min_resolved_t0,
)


def benchmark(alpha, beta, nt=200, nx=401, t0=None, **kw):
    p = DiffusionParams(alpha, beta)
    grid = Grid1D(-10.0, 10.0, nx)
    if t0 is None:
        t0 = max(0.01, min_resolved_t0(p, grid))
    return SolverConfig(p, grid, t0=t0, t_end=1.0, nt=nt, **kw)


def l1_at_end(cfg):
    f = solve(cfg)
    return f.l1_error(exact_profile(cfg.params, f.x, cfg.t_end)), f


def orders(errs):
    return [math.log2(errs[i] / errs[i + 1]) for i in range(len(errs) - 1)]


@pytest.fixture(scope="module")
def slow_field():
    return solve(benchmark(0.8, 0.5))


# --- configuration -----------------------------------------------------------


def test_grid_spacing():
    g = Grid1D(-1.0, 1.0, 5)
    assert g.dx == 0.5
    assert np.array_equal(g.x, [-1.0, -0.5, 0.0, 0.5, 1.0])
    for bad in [(1.0, -1.0, 5), (0.0, 1.0, 2)]:
        with pytest.raises(DomainError):
            Grid1D(*bad)


@pytest.mark.parametrize(
    "kw",
    [dict(t0=0.5, t_end=0.4), dict(nt=1), dict(scheme="cubic"), dict(mesh="random"), dict(sampling="mid"),
     dict(ic_mode="custom_P0", t0=0.0), dict(ic_mode="custom_P0", t0=0.1, p0=lambda x: x), dict(t0=0.0)],
)
def test_config_validation(kw):
    base = dict(params=DiffusionParams(1, 1), grid=Grid1D(-5, 5, 101))
    with pytest.raises(DomainError):
        SolverConfig(**base, **kw)


def test_default_grid_covers_six_standard_deviations():
    p = DiffusionParams(0.8, 0.5)
    g = default_grid(p, 2.0)
    assert g.x_max == pytest.approx(6 * math.sqrt(green_variance(p, 2.0)))
    assert g.x_min == -g.x_max


def test_under_resolved_start_rejected():
    with pytest.raises(ResolutionError):
        solve(SolverConfig(DiffusionParams(1.4, 1.0), Grid1D(-10, 10, 401), t0=0.001))


def test_min_resolved_start_is_resolved():
    p = DiffusionParams(1.4, 1.0)
    g = Grid1D(-10, 10, 401)
    t0 = min_resolved_t0(p, g)
    solve(SolverConfig(p, g, t0=t0, nt=3))
    with pytest.raises(ResolutionError):
        solve(SolverConfig(p, g, t0=0.9 * t0, nt=3))


# --- memory weights ------------------------------------------------------------


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 1.0), st.lists(st.floats(0.01, 1.0), min_size=1, max_size=30), st.sampled_from(["linear", "constant"]))
def test_weights_telescope(beta, steps, scheme):
    T = np.concatenate([[0.0], np.cumsum(steps)])
    w = level_weights(beta, T, scheme)
    expect = T[-1] ** beta / math.gamma(beta + 1)
    assert w.sum() == pytest.approx(expect, rel=1e-12)
    assert np.all(w >= 0)


def test_constant_weights_closed_form():
    beta = 0.4
    T = np.array([0.0, 0.3, 0.5, 1.2])
    w = level_weights(beta, T, "constant")
    Tn = T[-1]
    closed = ((Tn - T[:-1]) ** beta - (Tn - T[1:]) ** beta) / math.gamma(beta + 1)
    assert w[0] == 0.0
    assert np.allclose(w[1:], closed, rtol=1e-13)


def test_abel_weights_first_moment():
    # the linear hat moment integrates (u - a)/(b - a) against the kernel
    beta, T, a, b = 0.3, 2.0, 0.5, 1.1
    m0, m1 = abel_cell_weights(beta, T, a, b)
    u = np.linspace(a, b, 200001)
    k = (T - u) ** (beta - 1) / math.gamma(beta)
    assert m0 == pytest.approx(np.trapezoid(k, u), rel=1e-9)
    assert m1 == pytest.approx(np.trapezoid(k * (u - a) / (b - a), u), rel=1e-9)


def test_memory_sum_matches_erdelyi_kober_integral():
    # t^alpha I^{0,beta}_{alpha/beta} phi (t) is the Abel integral J^beta in T = t^(alpha/beta)
    alpha, beta = 0.8, 0.5
    eta = alpha / beta
    phi = SampledFunction(lambda s: np.cos(s ** eta))
    t = 1.0
    T = np.linspace(0.0, t ** eta, 2001)
    memory = level_weights(beta, T) @ np.cos(T)
    assert t ** alpha * ek_integral(EKParams(0, beta, eta), phi, t) == pytest.approx(memory, abs=1e-6)


def test_laplacian_of_quadratic():
    x = np.linspace(-1, 1, 11)
    lap = laplacian(3 * x * x, x[1] - x[0])
    assert lap[0] == lap[-1] == 0.0
    assert np.allclose(lap[1:-1], 6.0)


# --- benchmarks ----------------------------------------------------------------


@pytest.mark.parametrize(
    "alpha,beta,limit",
    [(1.0, 1.0, 1e-3), (0.6, 0.6, 5e-3), (1.4, 1.0, 5e-3), (0.8, 0.5, 5e-3), (1.4, 0.8, 5e-3), (0.5, 0.2, 5e-3)],
)
def test_matches_green_function(alpha, beta, limit):
    cfg = benchmark(alpha, beta)
    err, f = l1_at_end(cfg)
    assert err < limit
    var = f.variance / green_variance(cfg.params, f.times)
    assert np.max(np.abs(var - 1)) < 0.01
    assert np.max(np.abs(f.mass_drift)) < 1e-4
    assert f.values.min() > -1e-8


def test_variance_tracks_law(slow_field):
    f = slow_field
    law = 2 * f.times ** 0.8 / math.gamma(1.5)
    assert np.max(np.abs(f.variance / law - 1)) < 0.01
    # self-similarity: variance / t^alpha is flat across levels
    amp = f.variance / f.times ** 0.8
    assert (amp.max() - amp.min()) / amp.mean() < 0.01


def test_mass_conserved(slow_field):
    assert np.max(np.abs(slow_field.mass - slow_field.mass[0])) < 1e-4
    assert slow_field.mass[0] == pytest.approx(1.0, abs=1e-9)


def test_zero_initial_data_stays_zero():
    cfg = SolverConfig(DiffusionParams(0.7, 0.4), Grid1D(-5, 5, 101), t0=0.0, nt=20, ic_mode="custom_P0",
                       p0=lambda x: np.zeros_like(x))
    f = solve(cfg)
    assert not np.any(f.values)
    assert ek_residual(f, 5) == 0.0


def test_custom_box_start_spreads_and_conserves_mass():
    p = DiffusionParams(1.0, 1.0)
    grid = Grid1D(-15, 15, 601)
    # box edges on cell boundaries so the discrete start has unit mass
    a = 1.0 + grid.dx / 2
    box = lambda x: (np.abs(x) <= a) / (2 * a)
    f = solve(SolverConfig(p, grid, t0=0.0, t_end=1.0, nt=200, ic_mode="custom_P0", p0=box))
    assert f.mass[0] == pytest.approx(1.0, abs=1e-12)
    assert np.max(np.abs(f.mass - f.mass[0])) < 1e-4
    x = grid.x
    exact = (special.erf((x + a) / 2) - special.erf((x - a) / 2)) / (4 * a)
    assert f.l1_error(exact) < 2e-3


def test_final_time_and_levels():
    cfg = benchmark(1.0, 1.0, nt=2)
    f = solve(cfg)
    assert f.values.shape == (2, 401)
    assert f.times[0] == cfg.t0 and f.times[-1] == 1.0


# --- reductions --------------------------------------------------------------


def test_reduced_brownian_is_same_run():
    cfg = benchmark(1.0, 1.0)
    assert np.array_equal(solve_reduced("brownian", cfg).final, solve(cfg).final)


def test_reduced_stretched_gaussian():
    cfg = benchmark(1.4, 1.0)
    f = solve_reduced("stretched_gaussian", cfg)
    closed = np.exp(-f.x ** 2 / 4) / math.sqrt(4 * math.pi)
    assert f.l1_error(closed) < 1e-3


def test_reduced_time_fractional():
    cfg = benchmark(0.6, 0.6)
    f = solve_reduced("time_fractional", cfg)
    assert f.l1_error(ggbm_green(cfg.params, f.x, 1.0)) < 5e-3


@pytest.mark.parametrize("kind,ab", [("brownian", (0.6, 0.6)), ("time_fractional", (1.0, 1.0)),
                                     ("stretched_gaussian", (0.8, 0.5)), ("time_fractional", (0.8, 0.5))])
def test_reduced_rejects_mismatched_parameters(kind, ab):
    with pytest.raises(ParamMismatch):
        solve_reduced(kind, benchmark(*ab, nt=2))


def test_reduced_unknown_kind():
    with pytest.raises(DomainError):
        solve_reduced("levy", benchmark(1, 1, nt=2))


# --- convergence -------------------------------------------------------------


@pytest.mark.parametrize("alpha,beta", [(1.0, 1.0), (0.6, 0.6), (1.4, 0.8)])
def test_spatial_order(alpha, beta):
    # fine time mesh so the spatial error dominates
    errs = [l1_at_end(benchmark(alpha, beta, nt=400, nx=nx, t0=0.2))[0] for nx in (201, 401, 801)]
    assert min(orders(errs)) >= 1.9


@pytest.mark.parametrize("alpha,beta", [(1.0, 1.0), (0.6, 0.6), (1.4, 0.8)])
def test_time_order(alpha, beta):
    errs = [l1_at_end(benchmark(alpha, beta, nt=nt, nx=1601, t0=0.03))[0] for nt in (5, 9, 17, 33)]
    assert min(orders(errs)) >= 0.9


@pytest.mark.parametrize("alpha,beta", [(1.0, 1.0), (0.6, 0.6)])
def test_constant_scheme_is_first_order(alpha, beta):
    errs = [l1_at_end(benchmark(alpha, beta, nt=nt, nx=1601, t0=0.03, scheme="constant"))[0]
            for nt in (9, 17, 33, 65)]
    o = orders(errs)
    assert min(o) >= 0.9 and max(o) <= 1.1


@pytest.mark.parametrize("mesh,sampling", [("graded", "cell"), ("uniform", "point")])
def test_alternative_mesh_and_sampling_still_converge(mesh, sampling):
    err, _ = l1_at_end(benchmark(0.8, 0.5, mesh=mesh, sampling=sampling))
    assert err < 5e-3


# --- residual of the differential form ---------------------------------------


def test_residual_needs_three_levels(slow_field):
    with pytest.raises(InsufficientHistory):
        ek_residual(slow_field, 1)
    with pytest.raises(InsufficientHistory):
        ek_residual(slow_field, slow_field.times.size)


def test_residual_with_unit_beta_is_local_equation():
    cfg = benchmark(1.4, 1.0)
    f = solve(cfg)
    n = 120
    t2, t1, t0 = f.times[n], f.times[n - 1], f.times[n - 2]
    h1, h2 = t2 - t1, t1 - t0
    dpdt = ((2 * h1 + h2) / (h1 * (h1 + h2)) * f.values[n] - (h1 + h2) / (h1 * h2) * f.values[n - 1]
            + h1 / (h2 * (h1 + h2)) * f.values[n - 2])
    direct = np.max(np.abs(dpdt - 1.4 * t2 ** 0.4 * f.laplacians[n])[1:-1])
    assert ek_residual(f, n) == pytest.approx(direct, rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("alpha,beta", [(1.0, 1.0), (0.8, 0.5)])
def test_residual_shrinks_under_refinement(alpha, beta):
    res = []
    for nt, nx in ((51, 201), (101, 401), (201, 801)):
        f = solve(benchmark(alpha, beta, nt=nt, nx=nx, t0=0.2))
        far = np.nonzero(np.abs(f.x) >= 1.0)[0]
        far = far[(far > 0) & (far < nx - 1)]
        res.append(ek_residual(f, -1, nodes=far))
    assert res[0] < 1e-3
    assert min(orders(res)) >= 0.9
