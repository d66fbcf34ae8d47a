import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qbayes.errors import NonFiniteIntegrandError, ZeroIntegrandError
from qbayes.numerics import (
    LogWeightedIntegrand,
    PeriodicGrid,
    converged_log_integral,
    gauss_legendre_integrate,
    log_factorial,
    log_integrate,
    periodic_integrate,
    weighted_log_integral,
)

from oracles import half_line_integral, mean_cos_power_half


def test_grid_nodes_exact():
    g = PeriodicGrid(16)
    assert np.array_equal(g.nodes, np.arange(16) * (2 * math.pi / 16))


@pytest.mark.parametrize("n", [0, 4, 12, 100, 7.0])
def test_grid_rejects_bad_counts(n):
    with pytest.raises(ValueError):
        PeriodicGrid(n)


def test_constant_integrand():
    assert periodic_integrate(lambda p: np.ones_like(p), PeriodicGrid(8)) == pytest.approx(2 * math.pi, abs=1e-15)


def test_cosine_integrates_to_zero():
    assert abs(periodic_integrate(np.cos, PeriodicGrid(64))) < 1e-14


def test_normalized_fringe():
    value = periodic_integrate(lambda p: (1 + np.cos(p)) / (2 * math.pi), PeriodicGrid(256))
    assert value == pytest.approx(1.0, abs=1e-14)


def test_doubling_error_estimate():
    f = lambda p: np.exp(3 * np.cos(p))
    v, err = periodic_integrate(f, PeriodicGrid(8), full_output=True)
    exact = 2 * math.pi * float(mpmath.besseli(0, 3))
    assert err > 0
    # the estimate bounds the true error of the coarse rule within a modest factor
    assert abs(v - exact) <= 2 * err
    _, err_fine = periodic_integrate(f, PeriodicGrid(64), full_output=True)
    assert err_fine < 1e-13


def test_non_finite_node_is_named():
    def f(p):
        out = np.ones_like(p)
        out[5] = np.nan
        return out

    with pytest.raises(NonFiniteIntegrandError, match="node 5"):
        periodic_integrate(f, PeriodicGrid(8))


def test_log_integrate_trivial():
    assert log_integrate(LogWeightedIntegrand(), PeriodicGrid(8)) == pytest.approx(math.log(2 * math.pi), rel=1e-15)


def _fringe_term(exponent):
    def log_base(p):
        with np.errstate(divide="ignore"):
            return np.log((1 + np.cos(p)) / 2)

    return LogWeightedIntegrand([(exponent, log_base)])


def test_log_integrate_huge_exponent():
    n = 10_000
    value = log_integrate(_fringe_term(n), PeriodicGrid(4096))
    expected = math.log(2 * math.pi) + mean_cos_power_half(n)
    assert math.isfinite(value)
    assert value == pytest.approx(expected, rel=1e-12)


def test_log_integrate_matches_direct_at_small_exponent():
    direct = periodic_integrate(lambda p: ((1 + np.cos(p)) / 2) ** 10, PeriodicGrid(4096))
    assert log_integrate(_fringe_term(10), PeriodicGrid(4096)) == pytest.approx(math.log(direct), rel=1e-12)
    assert direct == pytest.approx(2 * math.pi * math.exp(mean_cos_power_half(10)), rel=1e-13)


def test_zero_base_node_is_skipped():
    def log_base(p):
        with np.errstate(divide="ignore"):
            return np.log((1 - np.cos(p)) / 2)

    integrand = LogWeightedIntegrand([(1, log_base)])
    lv = integrand.log_values(PeriodicGrid(8).nodes)
    assert lv[0] == -np.inf
    assert log_integrate(integrand, PeriodicGrid(8)) == pytest.approx(math.log(math.pi), rel=1e-14)


def test_zero_exponent_ignores_zero_base():
    integrand = LogWeightedIntegrand([(0, lambda p: np.full_like(p, -np.inf))])
    assert log_integrate(integrand, PeriodicGrid(8)) == pytest.approx(math.log(2 * math.pi))


def test_all_minus_infinity_is_an_error():
    integrand = LogWeightedIntegrand([(2, lambda p: np.full_like(p, -np.inf))])
    with pytest.raises(ZeroIntegrandError, match="zero integrand"):
        log_integrate(integrand, PeriodicGrid(8))


def test_negative_exponent_rejected():
    with pytest.raises(ValueError):
        LogWeightedIntegrand([(-1, np.cos)])


@settings(max_examples=60, deadline=None)
@given(
    st.floats(0, 20),
    st.floats(0, 20),
    st.floats(0.1, 3.0),
    st.floats(0.1, 3.0),
    st.floats(0, 2 * math.pi),
)
def test_log_path_matches_direct_path(mc, md, a, b, shift):
    s, x = (a * a + b * b) / 2, a * b
    lc = lambda p: np.log(np.clip(s + x * np.cos(p - shift), 1e-300, None))
    ld = lambda p: np.log(np.clip(s - x * np.cos(p - shift), 1e-300, None))
    integrand = LogWeightedIntegrand([(mc, lc), (md, ld)], extra_log_factor=lambda p: -0.3 * np.cos(p))
    grid = PeriodicGrid(512)
    direct = periodic_integrate(lambda p: np.exp(integrand.log_values(p)), grid)
    assert log_integrate(integrand, grid) == pytest.approx(math.log(direct), rel=1e-12, abs=1e-12)
    assert weighted_log_integral(integrand, grid) == pytest.approx(math.log(direct), rel=1e-12, abs=1e-12)


def test_converged_log_integral_doubles_for_sharp_peaks():
    n = 200_000
    value, grid = converged_log_integral(_fringe_term(n), node_count=64)
    assert grid.node_count > 64
    assert value == pytest.approx(math.log(2 * math.pi) + mean_cos_power_half(n), rel=1e-12)


def test_gauss_legendre_constant():
    assert gauss_legendre_integrate(lambda x: np.ones_like(x), 2) == pytest.approx(2.0, abs=1e-15)


def test_gauss_legendre_example():
    # u = (1+x)/2: 2 * int_0^1 u^2 (1-u) du = 1/6; confirmed by exact polynomial integration
    assert 2 * half_line_integral(2, 1) == Fraction(1, 6)
    value = gauss_legendre_integrate(lambda x: ((1 + x) / 2) ** 2 * (1 - x) / 2, 4)
    assert value == pytest.approx(1 / 6, rel=1e-14)


def test_gauss_legendre_odd_monomial():
    assert abs(gauss_legendre_integrate(lambda x: x**7, 4)) < 1e-15


def test_gauss_legendre_order_guard():
    with pytest.raises(ValueError):
        gauss_legendre_integrate(np.cos, 1)


@pytest.mark.parametrize("order", [3, 5, 9])
def test_gauss_legendre_exact_degree(order):
    deg = 2 * order - 1
    value = gauss_legendre_integrate(lambda x: x ** (deg - 1) + x**deg, order)
    assert value == pytest.approx(2 / deg, rel=1e-13)


def test_beta_identity_all_small_exponents():
    for p in range(13):
        for q in range(13):
            expected = math.factorial(p) * math.factorial(q) / math.factorial(p + q + 1)
            got = gauss_legendre_integrate(lambda x: ((1 + x) / 2) ** p * ((1 - x) / 2) ** q / 2, 13)
            assert got == pytest.approx(expected, rel=1e-12), (p, q)


def test_log_factorial_small():
    assert log_factorial(0) == 0.0
    assert log_factorial(5) == pytest.approx(math.log(120), rel=1e-15)


@pytest.mark.parametrize("n", [20, 21, 170, 171, 1000, 10**6])
def test_log_factorial_large(n):
    expected = float(mpmath.log(mpmath.factorial(n)))
    assert log_factorial(n) == pytest.approx(expected, rel=1e-14)


def test_log_factorial_170_beyond_naive_range():
    assert log_factorial(170) == pytest.approx(706.5730622457874, rel=1e-14)
    with pytest.raises(OverflowError):
        float(math.factorial(171))


def test_log_factorial_array_matches_scalar():
    n = np.arange(0, 60)
    assert np.allclose(log_factorial(n), [log_factorial(int(k)) for k in n], rtol=1e-15, atol=0)


def test_log_factorial_rejects_negative():
    with pytest.raises(ValueError):
        log_factorial(-1)
