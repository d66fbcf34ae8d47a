import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qbayes.errors import ImpossibleConditioningError
from qbayes.spin_bayes import (
    BlochPrior,
    SpinRecord,
    asymptotic_single_axis,
    conditional_record,
    exact_single_axis,
    posterior_bloch_density,
    record_probability,
    repeat_probability,
)

from oracles import single_axis_conditional_rational, uniform_sphere_points

SPHERE = BlochPrior.uniform_sphere()
BALL = BlochPrior.uniform_ball()
R = SpinRecord


def test_record_validation():
    with pytest.raises(ValueError):
        R(x=(1, -1))
    with pytest.raises(ValueError):
        R(x=(1.5, 0))
    with pytest.raises(ValueError):
        R.from_dict({"w": [1, 0]})
    assert R.from_dict({"y": [2, 1]}) == R(y=(2, 1))
    assert R(x=(1, 0)) + R(x=(1, 2), z=(0, 1)) == R(x=(2, 2), z=(0, 1))


def test_record_probability_example():
    assert record_probability(R(x=(2, 1)), SPHERE) == pytest.approx(0.25, rel=1e-12)


def test_single_repeat_is_two_thirds():
    p = conditional_record(R(x=(1, 0)), R(x=(1, 0)), SPHERE)
    assert p == pytest.approx(2 / 3, rel=1e-12)


def test_mixed_future_example():
    p = conditional_record(R(x=(1, 1)), R(x=(2, 1)), SPHERE)
    assert p == pytest.approx(0.4, rel=1e-12)
    assert exact_single_axis(1, 1, 2, 1, exact=True) == Fraction(2, 5)


@pytest.mark.parametrize("prior", [SPHERE, BALL])
def test_two_axes_independent_on_average(prior):
    assert record_probability(R(x=(1, 0), y=(1, 0)), prior) == pytest.approx(0.25, rel=1e-12)


@pytest.mark.parametrize("prior,second_moment", [(SPHERE, 1 / 3), (BALL, 1 / 5)])
def test_mixed_axes_second_moment(prior, second_moment):
    # integrand (1+x)^2 (1+y) / 8 averages to (1 + <x^2>) / 8
    p = record_probability(R(x=(2, 0), y=(1, 0)), prior)
    assert p == pytest.approx((1 + second_moment) / 8, rel=1e-12)
    # given x+ x+, the y outcome stays fair by reflection symmetry
    assert conditional_record(R(y=(1, 0)), R(x=(2, 0)), prior) == pytest.approx(0.5, rel=1e-12)


@pytest.mark.slow
def test_two_axes_monte_carlo():
    rng = np.random.default_rng(7)
    n = 10_000_000
    v = uniform_sphere_points(n, rng)
    hit_x = rng.random(n) < (1 + v[:, 0]) / 2
    hit_y = rng.random(n) < (1 + v[:, 1]) / 2
    est = np.mean(hit_x & hit_y)
    se = math.sqrt(est * (1 - est) / n)
    assert abs(est - record_probability(R(x=(1, 0), y=(1, 0)), SPHERE)) < 3 * se


@pytest.mark.parametrize("axis", ["x", "y", "z"])
def test_sphere_quadrature_matches_rational_oracle(axis):
    for np_, nm, mp, mm in [(1, 0, 0, 0), (2, 3, 1, 4), (0, 5, 3, 0), (4, 4, 10, 2)]:
        expected = single_axis_conditional_rational(np_, nm, mp, mm)
        got = conditional_record(R.single_axis(np_, nm, axis), R.single_axis(mp, mm, axis), SPHERE)
        assert got == pytest.approx(float(expected), rel=1e-12)


@settings(max_examples=80, deadline=None)
@given(*[st.integers(0, 15)] * 4)
def test_closed_form_matches_rational_oracle(np_, nm, mp, mm):
    assert exact_single_axis(np_, nm, mp, mm, exact=True) == single_axis_conditional_rational(np_, nm, mp, mm)
    assert exact_single_axis(np_, nm, mp, mm) == pytest.approx(
        float(single_axis_conditional_rational(np_, nm, mp, mm)), rel=1e-12)


def test_closed_form_array_input():
    n = np.arange(5)
    got = exact_single_axis(n, 4 - n, 3, 1)
    expected = [float(exact_single_axis(int(k), 4 - int(k), 3, 1, exact=True)) for k in n]
    assert np.allclose(got, expected, rtol=1e-13, atol=0)
    assert got.sum() == pytest.approx(1.0, rel=1e-13)


@pytest.mark.parametrize("m_plus,m_minus", [(0, 0), (3, 1), (7, 7), (0, 12)])
def test_completeness_exact(m_plus, m_minus):
    for total in range(1, 9):
        s = sum(exact_single_axis(k, total - k, m_plus, m_minus, exact=True) for k in range(total + 1))
        assert s == 1


def test_completeness_mixed_axes_ball():
    past = R(x=(2, 1), z=(0, 1))
    total = sum(conditional_record(R(x=(a, 1 - a), y=(b, 1 - b)), past, BALL) for a in (0, 1) for b in (0, 1))
    assert total == pytest.approx(1.0, rel=1e-12)


def test_chain_rule():
    # C(f1|p) C(f2|p+f1) counts ordered outcomes; the unordered versions
    # differ from C(f1+f2|p) by the ratio of multiplicities
    p, f1, f2 = (3, 1), (1, 2), (2, 0)
    c1 = exact_single_axis(*f1, *p, exact=True)
    c2 = exact_single_axis(*f2, p[0] + f1[0], p[1] + f1[1], exact=True)
    joint = exact_single_axis(f1[0] + f2[0], f1[1] + f2[1], *p, exact=True)
    mult = lambda f: math.comb(f[0] + f[1], f[0])
    assert c1 * c2 / (mult(f1) * mult(f2)) == joint / mult((f1[0] + f2[0], f1[1] + f2[1]))


def test_record_of_length_m_has_flat_probability():
    for m in range(8):
        probs = [record_probability(R(x=(k, m - k)), SPHERE) for k in range(m + 1)]
        assert np.allclose(probs, 1 / (m + 1), rtol=1e-12, atol=0)


def test_repeat_probability():
    assert repeat_probability(1, 1000, exact=True) == Fraction(1001, 1002)
    assert repeat_probability(3, 0) == pytest.approx(0.25)
    for m in (0, 1, 5, 40):
        assert repeat_probability(2, m, exact=True) == exact_single_axis(2, 0, m, 0, exact=True)


def test_asymptotic_limit_rate():
    # the gap to the binomial limit shrinks like 1/M
    errs = []
    ms = [100, 1000, 10_000]
    for m in ms:
        mp = int(0.7 * m)
        errs.append(abs(exact_single_axis(3, 2, mp, m - mp) - asymptotic_single_axis(3, 2, mp, m - mp)))
    slopes = np.diff(np.log(errs)) / np.diff(np.log(ms))
    assert np.all(np.abs(slopes + 1) < 0.05)


def test_asymptotic_requires_past():
    with pytest.raises(ValueError):
        asymptotic_single_axis(1, 0, 0, 0)


def test_prior_robustness_ball():
    p = conditional_record(R(x=(1, 0)), R(x=(1000, 0)), BALL)
    assert p == pytest.approx(repeat_probability(1, 1000), rel=1e-2)
    assert p < repeat_probability(1, 1000)


def test_tabulated_prior_matches_builtin():
    prior = BlochPrior.from_density(lambda x, y, z: np.ones_like(x), n_cos=32, n_azimuth=32, n_radius=32)
    expected = conditional_record(R(x=(1, 1)), R(x=(2, 0), y=(1, 0)), BALL)
    got = conditional_record(R(x=(1, 1)), R(x=(2, 0), y=(1, 0)), prior)
    assert got == pytest.approx(expected, rel=1e-10)


def test_tabulated_surface_prior():
    prior = BlochPrior.from_density(lambda x, y, z: np.ones_like(x), n_cos=16, n_azimuth=16, surface=True)
    assert conditional_record(R(x=(1, 0)), R(x=(1, 0)), prior) == pytest.approx(2 / 3, rel=1e-12)


def test_tabulated_prior_validation():
    c = np.linspace(-1, 1, 5)
    az = np.arange(4) * (math.pi / 2)
    r = np.linspace(0, 1, 3)
    with pytest.raises(ValueError, match="integrates"):
        BlochPrior.tabulated(c, az, r, np.ones((5, 4, 3)))
    with pytest.raises(ValueError, match="non-negative"):
        d = np.ones((5, 4, 3))
        d[0, 0, 0] = -1
        BlochPrior.tabulated(c, az, r, d, normalize=True)
    with pytest.raises(ValueError, match="shape"):
        BlochPrior.tabulated(c, az, r, np.ones((5, 4)))
    with pytest.raises(ValueError, match="uniform"):
        BlochPrior.tabulated(c, [0, 1, 2, 3], r, np.ones((5, 4, 3)), normalize=True)
    with pytest.raises(ValueError, match="ball"):
        BlochPrior.tabulated(c, az, np.linspace(0, 1.5, 3), np.ones((5, 4, 3)), normalize=True)
    ok = BlochPrior.tabulated(c, az, r, np.ones((5, 4, 3)), normalize=True)
    assert BlochPrior.from_dict(ok.to_dict()).to_dict() == ok.to_dict()


def test_impossible_conditioning_pure_state_prior():
    # all prior mass on the +z pole: a -z outcome can never happen
    prior = BlochPrior.tabulated([0.0, 1.0], [0.0], [1.0], [[[0.0]], [[2.0]]], normalize=True)
    with pytest.raises(ImpossibleConditioningError):
        conditional_record(R(x=(1, 0)), R(z=(0, 1)), prior)
    with pytest.raises(ImpossibleConditioningError):
        posterior_bloch_density(R(z=(0, 1)), prior)
    assert conditional_record(R(z=(1, 0)), R(z=(3, 0)), prior) == pytest.approx(1.0)


def test_posterior_concentrates_along_record():
    post = posterior_bloch_density(R(x=(100, 0)), SPHERE)
    assert post.total_mass() == pytest.approx(1.0, rel=1e-12)
    # analytic: P(x > 0.9) = 1 - ((1 + 0.9)/2)^101
    assert post.mass(lambda x, y, z: x > 0.9) == pytest.approx(1 - 0.95**101, abs=2e-3)
    mean = post.mean()
    assert mean[0] == pytest.approx(100 / 102, rel=1e-3)
    assert abs(mean[1]) < 1e-10 and abs(mean[2]) < 1e-10


def test_posterior_ball_normalized_and_columns():
    post = posterior_bloch_density(R(z=(3, 1)), BALL, n_cos=16, n_azimuth=8, n_radius=8)
    assert post.total_mass() == pytest.approx(1.0, rel=1e-12)
    cols = post.columns()
    assert set(cols) == {"cos_theta", "azimuth", "radius", "weight", "density"}
    assert all(len(v) == 16 * 8 * 8 for v in cols.values())
