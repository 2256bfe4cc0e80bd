import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from freeubm.series import (
    NonZeroInnerConstant,
    TruncatedSeries1,
    TruncatedSeries2,
    ZeroConstantTerm,
    conv2_truncated,
    max_residual,
    s1_compose,
    s1_div,
    s1_exp,
    s1_sqrt,
    s2_exp_linear,
    s2_recip,
)
from freeubm.specfun import eta_power, eta_series

CAP = 8
coef = st.floats(min_value=-2.0, max_value=2.0, allow_nan=False)
series = st.lists(coef, min_size=CAP + 1, max_size=CAP + 1).map(lambda c: TruncatedSeries1(c, CAP))
unit_series = series.map(lambda s: s - s[0] + 1.0)


def close(a, b, tol=1e-9):
    return max_residual(a, b) <= tol * (1 + float(np.max(np.abs(a.coeffs))) + float(np.max(np.abs(b.coeffs))))


@given(series, series, series)
def test_ring_axioms(a, b, c):
    assert close(a + b, b + a)
    assert close(a * b, b * a)
    assert close((a * b) * c, a * (b * c))
    assert close(a * (b + c), a * b + a * c)
    assert close(a - a, TruncatedSeries1.constant(0.0, CAP))


@given(series, unit_series)
def test_division_round_trip(a, b):
    assert close(s1_div(a, b) * b, a)


@given(unit_series.map(lambda s: s * s))
def test_sqrt_round_trip(a):
    r = s1_sqrt(a)
    assert close(r * r, a)


@given(series, series)
@settings(max_examples=50)
def test_compose_is_homomorphic(a, b):
    inner = TruncatedSeries1.variable(CAP) * 0.5 + TruncatedSeries1.variable(CAP) ** 2 * 0.25
    assert close(s1_compose(a * b, inner), s1_compose(a, inner) * s1_compose(b, inner))


def test_geometric_times_one_minus_z_is_one():
    g = TruncatedSeries1.geometric(10)
    assert (g * TruncatedSeries1([1.0, -1.0], 10)).allclose(TruncatedSeries1.constant(1.0, 10))


def test_exp_of_z():
    e = s1_exp(TruncatedSeries1.variable(10))
    assert np.allclose(e.coeffs, [1 / math.factorial(i) for i in range(11)], rtol=0, atol=1e-15)


def test_sqrt_one_minus_z_coefficients():
    s = s1_sqrt(TruncatedSeries1([1.0, -1.0], 4))
    assert np.allclose(s.coeffs, [1, -1 / 2, -1 / 8, -1 / 16, -5 / 128], atol=1e-15)


def test_division_by_zero_constant_raises():
    with pytest.raises(ZeroConstantTerm):
        s1_div(TruncatedSeries1.constant(1.0, 4), TruncatedSeries1.variable(4))


def test_compose_needs_zero_inner_constant():
    with pytest.raises(NonZeroInnerConstant):
        s1_compose(TruncatedSeries1.variable(4), TruncatedSeries1.constant(1.0, 4))


def test_cap_is_minimum_and_truncation_is_eager():
    a = TruncatedSeries1([1.0, 1.0, 1.0, 1.0], 3)
    b = TruncatedSeries1([1.0, 1.0], 1)
    assert (a * b).cap == 1
    assert (a * a).coeffs.tolist() == [1.0, 2.0, 3.0, 4.0]


def test_euler_and_shifts():
    a = TruncatedSeries1([0.0, 1.0, 2.0, 3.0], 3)
    assert a.euler().coeffs.tolist() == [0.0, 1.0, 4.0, 9.0]
    assert a.shift_down().coeffs.tolist() == [1.0, 2.0, 3.0]
    assert a.shift_up().coeffs.tolist() == [0.0, 0.0, 1.0, 2.0]


@pytest.mark.parametrize("t", [0.0, 0.5, 1.0, 2.0])
@pytest.mark.parametrize("j", [1, 2, 3, 5])
def test_eta_power_matches_repeated_multiplication(t, j):
    D = 12
    eta = eta_series(t, D)
    assert max_residual(eta_power(t, j, D), eta**j) <= 1e-10 * max(1.0, float(np.max(np.abs((eta**j).coeffs))))


two_var = st.lists(coef, min_size=16, max_size=16).map(lambda c: TruncatedSeries2(np.reshape(c, (4, 4)), 3, 3))


@given(two_var, two_var, two_var)
def test_two_variable_ring(a, b, c):
    tol = 1e-9
    assert np.allclose((a * b).coeffs, (b * a).coeffs, atol=tol)
    assert np.allclose(((a * b) * c).coeffs, (a * (b * c)).coeffs, atol=1e-8)
    assert np.allclose((a * (b + c)).coeffs, (a * b + a * c).coeffs, atol=tol)


@given(two_var)
def test_two_variable_reciprocal(a):
    a = a - a[0, 0] + 1.0
    one = a * s2_recip(a)
    expected = np.zeros((4, 4))
    expected[0, 0] = 1.0
    assert np.allclose(one.coeffs, expected, atol=1e-7 * (1 + np.max(np.abs(s2_recip(a).coeffs))))


def test_conv2_against_numpy_polynomial_product():
    rng = np.random.default_rng(0)
    a, b = rng.normal(size=(4, 5)), rng.normal(size=(4, 5))
    full = np.zeros((7, 9))
    for i in range(4):
        for j in range(5):
            full[i : i + 4, j : j + 5] += a[i, j] * b
    assert np.allclose(conv2_truncated(a, b, (4, 5)), full[:4, :5])
    assert np.allclose(conv2_truncated(a, b, (2, 3)), full[:2, :3])


def test_exp_linear_coefficients():
    t, alpha = 0.7, 0.3
    e = s2_exp_linear(t, alpha, 3, 3)
    for j in range(4):
        for k in range(4):
            expected = math.exp(t) * (alpha * t) ** (j + k) / (math.factorial(j) * math.factorial(k))
            assert e[j, k] == pytest.approx(expected, rel=1e-14)


def test_two_variable_recip_zero_constant():
    with pytest.raises(ZeroConstantTerm):
        s2_recip(TruncatedSeries2.from_poly({(1, 0): 1.0}, 3, 3))
