import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from ekdiff import (
    DiracOrder,
    DiffusionParams,
    DomainError,
    EKParams,
    SampledFunction,
    directing_pdf,
    ek_integral,
    gaussian_green,
    general_solution,
    ggbm_cdf,
    ggbm_cell_average,
    ggbm_green,
    green_mixture,
    green_profile,
    green_variance,
    mwright_tail_cut,
    stretched_gaussian_green,
    time_fractional_green,
)
from ekdiff._quad import gk_quad
from ekdiff.solver import _green_xx

X = np.linspace(-4.0, 4.0, 33)
TIMES = (0.5, 1.0, 2.0)


def test_params_classification():
    assert DiffusionParams(0.6, 0.6).is_slow
    assert DiffusionParams(1.5, 0.8).is_fast
    p = DiffusionParams(1.0, 1.0)
    assert not (p.is_slow or p.is_fast)
    assert DiffusionParams(1.4, 0.7).hurst == 0.7


@pytest.mark.parametrize("a,b", [(0.0, 0.5), (2.1, 0.5), (1.0, 0.0), (1.0, 1.2)])
def test_params_validated(a, b):
    with pytest.raises(DomainError):
        DiffusionParams(a, b)


def test_gaussian_peak_and_time_check():
    assert gaussian_green(0.0, 1.0) == pytest.approx(1 / math.sqrt(4 * math.pi), rel=1e-15)
    with pytest.raises(DomainError):
        gaussian_green(0.0, 0.0)


def test_gaussian_value_from_general_formula():
    expected = math.exp(-2.0) / math.sqrt(2 * math.pi)
    assert gaussian_green(2.0, 0.5) == pytest.approx(expected, rel=1e-14)
    assert ggbm_green(DiffusionParams(1, 1), 2.0, 0.5) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("t", TIMES)
def test_brownian_reduction(t):
    assert np.max(np.abs(ggbm_green(DiffusionParams(1, 1), X, t) - gaussian_green(X, t))) < 1e-10


@pytest.mark.parametrize("alpha", [0.5, 1.4, 2.0])
@pytest.mark.parametrize("t", TIMES)
def test_stretched_gaussian_reduction(alpha, t):
    closed = np.exp(-X * X / (4 * t ** alpha)) / math.sqrt(4 * math.pi) * t ** (-alpha / 2)
    assert np.max(np.abs(stretched_gaussian_green(alpha, X, t) - closed)) < 1e-15
    assert np.max(np.abs(ggbm_green(DiffusionParams(alpha, 1), X, t) - closed)) < 1e-10


@pytest.mark.parametrize("beta", [0.25, 0.6, 0.9])
@pytest.mark.parametrize("t", TIMES)
def test_time_fractional_reduction(beta, t):
    assert np.max(np.abs(ggbm_green(DiffusionParams(beta, beta), X, t) - time_fractional_green(beta, X, t))) < 1e-10


def test_value_frozen_from_series_oracle():
    # 0.5 t^-0.4 M_0.25(t^-0.4) at t = 2, 60-digit series sum
    assert ggbm_green(DiffusionParams(0.8, 0.5), 1.0, 2.0) == pytest.approx(0.176357479267538905, rel=1e-12)


def test_mixture_agrees_at_sample_point():
    p = DiffusionParams(0.8, 0.5)
    assert abs(green_mixture(p, 1.0, 2.0) - ggbm_green(p, 1.0, 2.0)) < 1e-6


def test_mixture_at_origin_uses_negative_half_moment():
    # (4 pi)^-1/2 Gamma(1/2) / Gamma(3/4)
    v = green_mixture(DiffusionParams(1.0, 0.5), 0.0, 1.0)
    assert v == pytest.approx(0.40802446954913149054, abs=1e-12)


def test_mixture_with_dirac_is_stretched_gaussian():
    p = DiffusionParams(1.3, 1.0)
    assert green_mixture(p, 0.7, 1.5) == stretched_gaussian_green(1.3, 0.7, 1.5)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
@pytest.mark.parametrize("beta", [0.25, 0.5, 0.75])
def test_dual_representation(alpha, beta):
    p = DiffusionParams(alpha, beta)
    for t in TIMES:
        for x in (-5.0, -1.3, 0.0, 0.4, 2.5, 5.0):
            assert abs(green_mixture(p, x, t) - ggbm_green(p, x, t)) < 1e-6


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 2.0), st.floats(0.1, 1.0), st.floats(-6, 6), st.floats(0.05, 20.0))
def test_self_similarity_and_symmetry(alpha, beta, x, t):
    p = DiffusionParams(alpha, beta)
    g = ggbm_green(p, x, t)
    assert g == ggbm_green(p, -x, t)
    s = t ** (-alpha / 2)
    assert g == pytest.approx(s * ggbm_green(p, x * s, 1.0), rel=1e-12, abs=1e-300)
    assert g >= 0


def test_variance_law_values():
    assert green_variance(DiffusionParams(1, 1), 3.0) == pytest.approx(6.0, rel=1e-15)
    assert green_variance(DiffusionParams(0.6, 0.6), 2.0) == pytest.approx(2 * 2 ** 0.6 / math.gamma(1.6), rel=1e-15)
    assert green_variance(DiffusionParams(1.4, 0.5), 1.0) == pytest.approx(4 / math.sqrt(math.pi), rel=1e-15)


@pytest.mark.parametrize("alpha,beta", [(1.4, 0.5), (0.6, 0.6), (1.0, 1.0), (0.5, 0.25)])
def test_profile_moments(alpha, beta):
    p = DiffusionParams(alpha, beta)
    prof = green_profile(p, 1.0, n=20001)
    assert prof.mass() == pytest.approx(1.0, abs=1e-4)
    assert prof.moment(2) == pytest.approx(green_variance(p, 1.0), rel=1e-3)
    assert np.allclose(prof.values, prof.values[::-1], rtol=0, atol=0)
    assert np.all(prof.values >= 0)


@pytest.mark.parametrize("alpha,beta", [(0.6, 0.4), (1.5, 0.8), (1.0, 1.0)])
def test_cdf_matches_quadrature(alpha, beta):
    p = DiffusionParams(alpha, beta)
    for x in (-2.0, -0.3, 0.0, 0.7, 3.0):
        q, _ = gk_quad(lambda s: ggbm_green(p, s, 1.3), 0.0, abs(x), tol=1e-14) if x else (0.0, 0.0)
        assert ggbm_cdf(p, x, 1.3) == pytest.approx(0.5 + math.copysign(q, x), abs=1e-12)


def test_brownian_cdf_closed_form():
    p = DiffusionParams(1, 1)
    x = np.linspace(-5, 5, 21)
    assert np.allclose(ggbm_cdf(p, x, 2.0), 0.5 * (1 + special.erf(x / math.sqrt(8.0))), atol=1e-14)


def test_cell_average_conserves_mass_and_tends_to_point_value():
    p = DiffusionParams(0.8, 0.5)
    dx = 0.05
    x = np.arange(-800, 801) * dx
    cells = ggbm_cell_average(p, x, dx, 1.0)
    assert cells.sum() * dx == pytest.approx(1.0, abs=1e-12)
    # away from the cusp the cell mean is the point value up to O(dx^2)
    sel = np.abs(x) > 0.5
    assert np.max(np.abs(cells[sel] - ggbm_green(p, x[sel], 1.0))) < 1e-3
    # broadcasting over time rows
    two = ggbm_cell_average(p, x[None, :], dx, np.array([[0.5], [1.0]]))
    assert two.shape == (2, x.size) and np.array_equal(two[1], cells)


def test_directing_pdf_normalisation_and_mean():
    p = DiffusionParams(0.7, 0.6)
    t = 1.7
    ta = t ** p.alpha
    cut = mwright_tail_cut(p.beta, 1e-16) * ta
    mass, _ = gk_quad(lambda s: directing_pdf(p, s, t), 0.0, cut, tol=1e-13)
    mean, _ = gk_quad(lambda s: s * directing_pdf(p, s, t), 0.0, cut, tol=1e-13)
    assert mass == pytest.approx(1.0, abs=1e-8)
    assert mean == pytest.approx(ta / math.gamma(p.beta + 1), rel=1e-8)


def test_directing_pdf_dirac_case():
    with pytest.raises(DiracOrder):
        directing_pdf(DiffusionParams(1.2, 1.0), 1.0, 1.0)


def test_convolution_with_box_matches_erf_closed_form():
    p = DiffusionParams(1, 1)
    box = SampledFunction(lambda s: 0.5 * (np.abs(s) <= 1.0), domain=(-1.0, 1.0))
    x = 0.3
    expected = 0.2553528452294955404  # (erf((x+1)/2) - erf((x-1)/2)) / 4, mpmath
    assert general_solution(p, box, x, 1.0) == pytest.approx(expected, abs=1e-10)
    # brute Riemann sum over the box
    xi = np.linspace(-1, 1, 200001)
    riemann = np.trapezoid(0.5 * gaussian_green(x - xi, 1.0), xi)
    assert general_solution(p, box, x, 1.0) == pytest.approx(riemann, abs=1e-9)


def test_convolution_with_narrow_gaussian_approaches_green():
    p = DiffusionParams(0.8, 0.5)
    eps = 1e-3
    bump = SampledFunction(lambda s: np.exp(-s * s / (2 * eps * eps)) / (eps * math.sqrt(2 * math.pi)),
                           domain=(-12 * eps, 12 * eps))
    for x in (0.05, 0.5, 1.5):
        assert general_solution(p, bump, x, 1.0) == pytest.approx(ggbm_green(p, x, 1.0), abs=1e-4)
    # at the cusp the mollifier shifts the value by |G'(0+)| eps sqrt(2/pi),
    # with G'(0+) = -1/(2 Gamma(1/2)) here (beta/2 = 1/4, t = 1)
    shift = eps * math.sqrt(2 / math.pi) / (2 * math.sqrt(math.pi))
    assert general_solution(p, bump, 0.0, 1.0) == pytest.approx(ggbm_green(p, 0.0, 1.0) - shift, abs=2e-6)


def test_convolution_conserves_mass():
    p = DiffusionParams(0.6, 0.4)
    box = SampledFunction(lambda s: 0.5 * (np.abs(s) <= 1.0), domain=(-1.0, 1.0))
    x = np.linspace(-25, 25, 1001)
    vals = np.array([general_solution(p, box, xi, 0.5, tol=1e-12) for xi in x])
    assert np.trapezoid(vals, x) == pytest.approx(1.0, abs=1e-5)


def test_convolution_needs_support():
    with pytest.raises(DomainError):
        general_solution(DiffusionParams(1, 1), lambda s: s, 0.0, 1.0)


@pytest.mark.parametrize("alpha,beta", [(0.8, 0.5), (1.4, 0.8), (0.6, 0.6)])
def test_green_function_solves_integral_equation(alpha, beta):
    # G(x, t) = t^alpha I^{0,beta}_{alpha/beta}[d^2G/dx^2](t) away from x = 0
    p = DiffusionParams(alpha, beta)
    x = np.array([0.6, 1.2])
    q = SampledFunction(lambda s: _green_xx(p, x, np.atleast_1d(s).ravel()).reshape(np.shape(s) + (x.size,)))
    t = 1.0
    got = t ** alpha * ek_integral(EKParams(0, beta, alpha / beta), q, t)
    assert np.allclose(got, ggbm_green(p, x, t), rtol=1e-6)
