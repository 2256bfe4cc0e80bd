import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from freeubm.moments import (
    GridTooSmall,
    binomial_convolution,
    constancy_values,
    corollary_c_check,
    g_series,
    half_c_coefficients,
    jacobi_even_half_series,
    jacobi_even_ode,
    jacobi_even_path,
    mixed_coeff_grid,
    mixed_moment_closed,
    mixed_ode_path,
    mixed_ode_table,
    moment_PY_closed,
    odd_half_closed,
    odd_half_series,
    odd_ode,
    remark_expansion_check,
    stationary_even_half,
    stationary_formula_check,
    stationary_odd_half,
    verify_biane_inverse,
    verify_constancy,
    verify_functional_relation,
    verify_oddeven,
    verify_stationary,
    verify_w_square,
)
from freeubm.series import TruncatedSeries1
from freeubm.specfun import fubm_moment, q_poly

import reference_values as ref


def test_moment_PY_examples():
    assert moment_PY_closed(1, 0.3, 1.2) == pytest.approx(0.3 * math.exp(-0.6))
    assert moment_PY_closed(2, 1.0, 1.0) == pytest.approx(0.0, abs=1e-16)
    for n in range(6):
        assert moment_PY_closed(n, 1.0, 0.7) == pytest.approx(fubm_moment(n, 0.7))


def test_g_series_at_time_zero():
    alpha = 0.4
    g = g_series(alpha, 0.0, 3, 3)
    for j in range(4):
        for k in range(4):
            assert g[j, k] == pytest.approx(-((-1) ** (j + k)) / alpha)
    assert g[1, 0] == pytest.approx(1 / alpha)


@pytest.mark.parametrize("alpha", [0.25, 0.5, 0.9, 1.0])
@pytest.mark.parametrize("t", [0.0, 0.7, 2.0])
def test_coefficient_grid_sanity(alpha, t):
    grid = mixed_coeff_grid(alpha, t, 6)
    assert grid[0, 0] == pytest.approx(alpha, abs=1e-12)
    assert grid[1, 0] == pytest.approx(alpha, abs=1e-12)
    assert grid[1, 1] == pytest.approx(ref.R11(alpha, t), rel=1e-12)
    assert grid.is_symmetric()


@pytest.mark.parametrize("alpha", [0.25, 0.5, 0.9])
@pytest.mark.parametrize("t", [0.3, 1.0, 2.0])
def test_closed_mixed_low_orders(alpha, t):
    assert mixed_moment_closed(1, 1, alpha, t) == pytest.approx(ref.R11(alpha, t), abs=1e-12)
    assert mixed_moment_closed(2, 1, alpha, t) == pytest.approx(math.exp(1.5 * t) * ref.s11(alpha, t), abs=1e-12)
    for m in range(6):
        assert mixed_moment_closed(m, 0, alpha, t) == pytest.approx(alpha * q_poly(m, alpha * t), abs=1e-12)


def test_closed_mixed_at_time_zero_and_symmetry():
    grid = mixed_coeff_grid(0.35, 0.0, 6)
    for m in range(1, 7):
        for n in range(1, 7):
            assert mixed_moment_closed(m, n, 0.35, 0.0, grid) == pytest.approx(0.35, abs=1e-12)
    grid = mixed_coeff_grid(0.35, 1.3, 8)
    for m in range(1, 9):
        for n in range(1, 9):
            assert mixed_moment_closed(m, n, 0.35, 1.3, grid) == pytest.approx(
                mixed_moment_closed(n, m, 0.35, 1.3, grid), abs=1e-10
            )


def test_grid_too_small():
    with pytest.raises(GridTooSmall):
        mixed_moment_closed(4, 4, 0.5, 1.0, mixed_coeff_grid(0.5, 1.0, 2))


@pytest.mark.parametrize("t", [0.4, 1.0, 2.0])
def test_full_rank_property(t):
    grid = mixed_coeff_grid(1.0, t, 6)
    for m in range(1, 7):
        for n in range(1, 7):
            expected = math.exp(t * min(m, n)) * q_poly(abs(m - n), t)
            assert mixed_moment_closed(m, n, 1.0, t, grid) == pytest.approx(expected, abs=1e-8, rel=1e-10)


@pytest.mark.parametrize("alpha", [0.25, 0.5, 0.9])
def test_mixed_ode_matches_closed(alpha):
    times = [0.0, 0.5, 1.0, 2.0]
    tables = mixed_ode_path(6, 6, alpha, times)
    for t, table in zip(times, tables):
        grid = mixed_coeff_grid(alpha, t, 6)
        for m in range(7):
            for n in range(7):
                assert table[(m, n)] == pytest.approx(mixed_moment_closed(m, n, alpha, t, grid), abs=1e-6)
        assert table.is_symmetric(1e-9)


def test_mixed_ode_specific_examples():
    assert mixed_ode_table(1, 1, 0.5, 1.0)[(1, 1)] == pytest.approx(ref.R11(0.5, 1.0), abs=1e-8)
    zero = mixed_ode_table(3, 3, 0.4, 0.0)
    assert all(v == pytest.approx(0.4) for (m, n), v in zero.values.items() if m + n <= 1 or (m and n))


@pytest.mark.parametrize("alpha", [0.25, 0.5, 0.9])
def test_even_hierarchy_against_printed(alpha):
    times = np.linspace(0, 2, 9)
    for t, table in zip(times, jacobi_even_path(3, alpha, times)):
        assert table[1] == pytest.approx(ref.r1(alpha, t), abs=1e-8)
        assert table[2] == pytest.approx(ref.r2(alpha, t), abs=1e-8)
    assert all(v == alpha for v in jacobi_even_ode(4, alpha, 0.0).values.values())


@pytest.mark.parametrize("alpha", [0.25, 0.5, 0.9])
def test_odd_hierarchy_against_printed(alpha):
    for t in [0.0, 0.5, 1.0, 2.0]:
        table = odd_ode(3, alpha, t)
        assert table[0] == pytest.approx(ref.s01(alpha, t), abs=1e-7)
        assert table[1] == pytest.approx(ref.s11(alpha, t), abs=1e-7)
        assert table[2] == pytest.approx(ref.s21(alpha, t), abs=1e-7)


@pytest.mark.parametrize("t", [0.25, 1.0, 2.0])
def test_half_closed_pipeline_matches_ode(t):
    ode = odd_ode(8, 0.5, t)
    for route in ("compose", "convolution"):
        closed = odd_half_closed(8, t, route=route)
        for n in range(9):
            assert closed[n] == pytest.approx(ode[n], abs=1e-6)
    even = jacobi_even_ode(10, 0.5, t)
    series = jacobi_even_half_series(t, 10)
    for n in range(1, 11):
        assert series[n] == pytest.approx(even[n], abs=1e-7)


def test_half_series_examples():
    assert jacobi_even_half_series(0.0, 6).coeffs == pytest.approx([0.5] * 7)
    assert jacobi_even_half_series(1.0, 4)[1] == pytest.approx(0.25 + math.exp(-1) / 4)
    for n in range(1, 6):
        assert odd_half_closed(5, 0.0)[n] == pytest.approx(0.5, abs=1e-14)
    for t in [0.3, 1.0, 2.0]:
        expected = math.exp(-t / 2) * (3 / 8 + (1 - t) * math.exp(-t) / 8)
        assert odd_half_closed(1, t)[1] == pytest.approx(expected, abs=1e-14)


def test_stationary_half_limits():
    N = jacobi_even_half_series(math.inf, 8)
    assert N.allclose(stationary_even_half(8))
    binom = [math.comb(2 * n, n) / 4**n / 2 for n in range(9)]
    assert stationary_even_half(8).coeffs == pytest.approx(binom)
    assert odd_half_series(math.inf, 8).allclose(stationary_odd_half(8))
    assert odd_half_closed(4, math.inf)[3] == 0.0


def test_long_time_limits():
    even = jacobi_even_ode(6, 0.5, 30.0)
    odd = odd_ode(6, 0.5, 30.0)
    Ninf = stationary_even_half(6)
    for n in range(1, 7):
        assert even[n] == pytest.approx(Ninf[n], abs=1e-6)
        assert abs(odd[n]) <= 1e-6


def test_binomial_convolution():
    assert binomial_convolution([1.0, 0.0, 0.0]) == [1.0, 2.0, 6.0]
    c = half_c_coefficients(1.0, 3).coeffs
    assert c[0] == pytest.approx(0.5)


@pytest.mark.parametrize("t", [0.0, 0.5, 1.0, 2.0])
def test_identity_checks(t):
    for check in (verify_w_square, verify_oddeven):
        rep = check(t, 12)
        assert rep.passed and rep.residual <= 1e-8
    assert verify_biane_inverse(t, 12).residual <= 1e-9
    assert verify_functional_relation(t, 12).residual <= 1e-9


def test_identity_check_edge_cases():
    assert verify_w_square(0.0, 12).residual <= 1e-10
    assert verify_w_square(1.0, 1).residual <= 1e-12
    assert verify_oddeven(0.0, 12).residual <= 1e-10
    rep = verify_oddeven(30.0, 12)
    assert rep.residual <= 1e-6
    assert jacobi_even_half_series(30.0, 12).allclose(stationary_even_half(12), atol=1e-6)


def test_stationary_check_and_negative_control():
    rep = verify_stationary(12)
    assert rep.passed and rep.residual <= 1e-9
    bumped = stationary_odd_half(12) + 1e-2 * TruncatedSeries1.variable(12) ** 2
    assert verify_stationary(12, v_inf=bumped).residual > 1e-3


def test_constancy():
    grid = [0.0, 0.5, 1.0, 2.0]
    rep = verify_constancy(1, grid)
    assert rep.passed
    assert rep.detail["F"][0] == pytest.approx(-0.25, abs=1e-12)
    assert rep.detail["expected_constant"] == pytest.approx(-0.25)
    for n in (2, 3):
        rep = verify_constancy(n, grid)
        assert rep.passed
        assert rep.detail["F"][0] == pytest.approx(rep.detail["expected_constant"], abs=1e-8)
    assert verify_constancy(2, [1.0]).residual == 0.0
    assert len(constancy_values(2, grid)) == 4


def test_discrepancy_checks_flag_inconsistencies():
    assert not remark_expansion_check(0.5, 1.0).passed
    assert remark_expansion_check(1.0, 1.0).passed
    rep = corollary_c_check(1.0)
    assert not rep.passed
    assert rep.detail["derived_c1"] == pytest.approx((1 + (1 - 1.0) * math.exp(-1.0)) / 2)
    for alpha in (0.25, 0.5, 0.9):
        rep = stationary_formula_check(alpha)
        assert not rep.passed
        assert rep.residual == pytest.approx(alpha)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.05, 1.0), st.floats(0.0, 2.0))
def test_closed_forms_start_at_alpha(alpha, t):
    assert mixed_moment_closed(0, 0, alpha, t) == alpha
    assert mixed_coeff_grid(alpha, t, 3)[0, 0] == pytest.approx(alpha, rel=1e-12)

