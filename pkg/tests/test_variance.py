import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from garkit.errors import DomainError
from garkit.functions import IDENTITY, ZERO, InfluenceFunction, ResidualWeight, WeightFunction, constant_function
from garkit.gar import GarRep, mean_rep, residual_rep
from garkit.indexes import gini_gar
from garkit.models import exponential, lognormal, pareto, uniform
from garkit.quadrature import gauss_legendre
from garkit.variance import (
    gamma2,
    gamma3,
    gamma_cov,
    indicator_cov,
    moment_conditions_check,
    total_variance,
)


def riemann_gamma2(ell, n=10_000, chunk=1_000):
    """Midpoint double sum of (min(s,t) - st) ell(s) ell(t) over an n x n grid."""
    s = (np.arange(n) + 0.5) / n
    e = ell(s)
    total = 0.0
    for i in range(0, n, chunk):
        si = s[i:i + chunk, None]
        kernel = np.minimum(si, s[None, :]) - si * s[None, :]
        total += float(np.sum(kernel * e[i:i + chunk, None] * e[None, :]))
    return total / n**2


def riemann_gamma3(h, ell, quantile, n=2_000):
    """Midpoint double sum of (h(Q(u)) - Eh)(1(u <= s) - s) ell(s)."""
    u = (np.arange(n) + 0.5) / n
    hv = h(quantile(u))
    hc = hv - hv.mean()
    ind = (u[:, None] <= u[None, :]).astype(float) - u[None, :]
    return float(hc @ ind @ ell(u)) / n**2


# ------------------------------------------------------------- models


@pytest.mark.parametrize("model", [uniform(0, 1), uniform(-2, 3), exponential(2.0), pareto(1, 1.5), lognormal(0.3, 0.8)])
def test_model_generalized_inverse(model):
    s = (np.arange(1000) + 0.5) / 1000
    x = model.quantile(s)
    assert np.all(model.cdf(x) >= s - 1e-9)
    assert np.all(model.quantile(model.cdf(x)) <= x + 1e-9 * np.maximum(1, np.abs(x)))
    assert np.all(np.diff(model.cdf(np.sort(x))) >= 0)


def test_model_sampler_reproducible():
    m = lognormal(0, 1)
    a = m.sample(50, np.random.Generator(np.random.Philox(key=7)))
    b = m.sample(50, np.random.Generator(np.random.Philox(key=7)))
    np.testing.assert_array_equal(a, b)


# --------------------------------------------------------------- gamma_cov


def test_gamma_cov_uniform_variance(unit_uniform, quad):
    assert gamma_cov(IDENTITY, IDENTITY, unit_uniform, quad) == pytest.approx(1 / 12, abs=1e-9)


def test_gamma_cov_with_constant(unit_uniform, quad):
    assert gamma_cov(IDENTITY, constant_function(4.0), unit_uniform, quad) == pytest.approx(0.0, abs=1e-15)


def test_gamma_cov_against_scipy(quad):
    model = exponential(1.0)
    h = InfluenceFunction(lambda x: np.sqrt(x), "sqrt")
    ref_m = integrate.quad(lambda x: np.sqrt(x) * np.exp(-x), 0, np.inf)[0]
    ref_v = integrate.quad(lambda x: (np.sqrt(x) - ref_m) ** 2 * np.exp(-x), 0, np.inf)[0]
    assert gamma_cov(h, h, model, quad) == pytest.approx(ref_v, abs=1e-5)


coeffs = st.lists(st.floats(-3, 3), min_size=3, max_size=3)


def _poly(c):
    return InfluenceFunction(lambda x: c[0] + c[1] * x + c[2] * x**2, "poly")


@given(coeffs, coeffs)
def test_cauchy_schwarz_and_nonnegativity(c1, c2):
    model, quad = uniform(0, 1), gauss_legendre(64)
    h1, h2 = _poly(c1), _poly(c2)
    v1, v2 = gamma_cov(h1, h1, model, quad), gamma_cov(h2, h2, model, quad)
    assert v1 >= -1e-15 and v2 >= -1e-15
    assert gamma_cov(h1, h2, model, quad) ** 2 <= v1 * v2 + 1e-9


@given(coeffs, coeffs, st.floats(-4, 4), st.floats(-4, 4))
def test_cramer_wold_bilinearity(c1, c2, a, b):
    model, quad = exponential(1.0), gauss_legendre(128)
    h1, h2 = _poly(c1), _poly(c2)
    combo = InfluenceFunction(lambda x: a * h1(x) + b * h2(x), "combo")
    lhs = gamma_cov(combo, combo, model, quad)
    rhs = (a * a * gamma_cov(h1, h1, model, quad) + 2 * a * b * gamma_cov(h1, h2, model, quad)
           + b * b * gamma_cov(h2, h2, model, quad))
    assert lhs == pytest.approx(rhs, abs=1e-9, rel=1e-12)


# ------------------------------------------------------------ indicators


def test_indicator_cov_values():
    assert indicator_cov(0.5, 0.5) == 0.25
    assert indicator_cov(0.2, 0.8) == pytest.approx(0.04, abs=1e-15)
    assert indicator_cov(0.3, 0.6) == indicator_cov(0.6, 0.3)


def test_indicator_cov_brute_force_expectation():
    # E[1(U<=s) 1(U<=t)] - st on a fine midpoint grid of U
    u = (np.arange(1_000_000) + 0.5) / 1_000_000
    for s, t in [(0.5, 0.5), (0.2, 0.8), (0.9, 0.35)]:
        brute = np.mean((u <= s) & (u <= t)) - np.mean(u <= s) * np.mean(u <= t)
        assert indicator_cov(s, t) == pytest.approx(brute, abs=2e-6)


@pytest.mark.parametrize("s, t", [(0.0, 0.5), (0.5, 1.0), (-1, 0.2)])
def test_indicator_cov_domain(s, t):
    with pytest.raises(DomainError):
        indicator_cov(s, t)


# ---------------------------------------------------------------- gamma2


def test_gamma2_zero(quad):
    assert gamma2(ResidualWeight(lambda s: 0 * s), quad) == 0.0


def test_gamma2_gini_uniform_weight(quad):
    ell = ResidualWeight(lambda s: -4 * s)
    brute = riemann_gamma2(ell)
    assert brute == pytest.approx(16 / 45, abs=1e-6)
    assert gamma2(ell, quad) == pytest.approx(16 / 45, abs=1e-6)
    assert gamma2(ell, quad) == pytest.approx(brute, abs=1e-6)


@pytest.mark.parametrize("c", [1.0, -2.5, 7.0])
def test_gamma2_constant_weight(c, quad):
    assert gamma2(ResidualWeight(lambda s: c + 0 * s), quad) == pytest.approx(c * c / 12, abs=1e-12)


def test_gamma2_smooth_weight_against_riemann(quad):
    ell = ResidualWeight(lambda s: np.exp(s) * np.cos(3 * s))
    assert gamma2(ell, quad) == pytest.approx(riemann_gamma2(ell, n=4_000), abs=1e-6)


def test_gamma2_node_doubling_gini_uniform():
    ell = gini_gar(uniform(0, 1)).residual
    assert abs(gamma2(ell, gauss_legendre(256)) - gamma2(ell, gauss_legendre(512))) < 1e-8


# ---------------------------------------------------------------- gamma3


def test_gamma3_trivial(unit_uniform, quad):
    ell = ResidualWeight(lambda s: s)
    assert gamma3(IDENTITY, ResidualWeight(lambda s: 0 * s), unit_uniform, quad) == 0.0
    assert gamma3(constant_function(3.0), ell, unit_uniform, quad) == pytest.approx(0.0, abs=1e-15)


def test_gamma3_identity_unit_weight(unit_uniform, quad):
    ell = ResidualWeight(lambda s: 1 + 0 * s)
    value = gamma3(IDENTITY, ell, unit_uniform, quad)
    assert value == pytest.approx(-1 / 12, abs=1e-12)
    assert value == pytest.approx(riemann_gamma3(IDENTITY, ell, unit_uniform.quantile), abs=1e-6)


def test_gamma3_against_riemann_exponential(quad):
    model = exponential(1.0)
    h = InfluenceFunction(lambda x: np.sqrt(x), "sqrt")
    ell = ResidualWeight(lambda s: s * (1 - s))
    assert gamma3(h, ell, model, quad) == pytest.approx(riemann_gamma3(h, ell, model.quantile), abs=1e-5)


def test_gamma3_sign_flip(unit_uniform, quad):
    h = InfluenceFunction(lambda x: x**3, "x^3")
    ell = ResidualWeight(lambda s: np.sin(s))
    neg = ResidualWeight(lambda s: -np.sin(s))
    assert gamma3(h, neg, unit_uniform, quad) == -gamma3(h, ell, unit_uniform, quad)


# --------------------------------------------------------------- totals


def test_total_for_mean(unit_uniform, quad):
    rep = total_variance(mean_rep(IDENTITY, 0.5), unit_uniform, quad)
    assert rep.gamma2 == rep.gamma3 == 0.0
    assert rep.total == pytest.approx(1 / 12, abs=1e-12)


def test_total_for_pure_residual(unit_uniform, quad):
    rep = total_variance(GarRep(0.0, ZERO, ResidualWeight(lambda s: -4 * s)), unit_uniform, quad)
    assert rep.total == pytest.approx(16 / 45, abs=1e-9)


def test_total_is_even(quad):
    model = exponential(1.0)
    h = InfluenceFunction(lambda x: np.sqrt(x), "sqrt")
    ell = ResidualWeight(lambda s: 1 - s * s)
    a = total_variance(GarRep(1.0, h, ell), model, quad)
    b = total_variance(GarRep(1.0, InfluenceFunction(lambda x: -np.sqrt(x)), ResidualWeight(lambda s: -(1 - s * s))), model, quad)
    assert a.total == pytest.approx(b.total, abs=1e-14)


def test_total_identity_and_sign(any_model, quad):
    rep = gini_gar(any_model, quad)
    v = total_variance(rep, any_model, quad)
    assert v.total == v.gamma1 + v.gamma2 + 2 * v.gamma3
    assert v.to_dict()["total"] == v.gamma1 + v.gamma2 + 2 * v.gamma3
    assert v.gamma1 >= 0 and v.gamma2 >= 0
    assert v.total >= -1e-6


def test_gini_uniform_total_closed_form(unit_uniform, quad):
    # combined influence 2x^2 - 8x/3 + const has variance 8/135 under U(0,1)
    assert total_variance(gini_gar(unit_uniform), unit_uniform, quad).total == pytest.approx(8 / 135, abs=1e-12)


# ------------------------------------------------------------- moments


def test_moment_flags_bounded_support(unit_uniform, quad):
    rep = residual_rep(WeightFunction(lambda x: 2 * x, "2x"), unit_uniform.quantile)
    rep = GarRep(0.0, IDENTITY, rep.residual)
    flags = moment_conditions_check(rep, unit_uniform, quad)
    assert flags["Th11"] and flags["Th12"] and flags["Th33"]


def test_moment_flags_heavy_tail(quad):
    model = pareto(1.0, 1.5)
    rep = residual_rep(WeightFunction(lambda x: x, "x"), model.quantile)
    assert moment_conditions_check(rep, model, quad)["Th33"] is False


def test_moment_flags_zero_influence(quad):
    model = pareto(1.0, 1.5)
    rep = residual_rep(WeightFunction(lambda x: x, "x"), model.quantile)
    flags = moment_conditions_check(rep, model, quad)
    assert flags["Th11"] and flags["Th12"]


def test_moment_flags_light_tail_exponential(quad):
    model = exponential(1.0)
    rep = GarRep(1.0, IDENTITY, residual_rep(WeightFunction(lambda x: 2 * x, "2x"), model.quantile).residual)
    flags = moment_conditions_check(rep, model, quad)
    assert flags["Th11"] and flags["Th12"] and flags["Th33"]
