"""Tests for the Hastings-McLeod and P_I^2 boundary-value solves."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from modules import specfun
from modules.painleve import (
    hm_auxiliary, pi2_Q, solve_hastings_mcleod, solve_pi2, solve_pi2_family, tail_series,
)
from utils import run_cache
from utils.errors import DomainError


@pytest.fixture(scope="module")
def pi2_zero():
    return run_cache.fetch_pi2(0.0)


@pytest.fixture(scope="module")
def pi2_minus_one():
    return run_cache.fetch_pi2(-1.0)


class TestTailSeries:

    def test_pii_left_coefficients(self):
        tail = tail_series("PII", "left")
        assert tail.coeffs[0] == 1.0
        assert tail.coeffs[1] == pytest.approx(-0.125)

    def test_pii_left_leading_term(self):
        tail = tail_series("PII", "left")
        s = -100.0
        assert_allclose(tail.evaluate(s), math.sqrt(50.0) * (1 - 0.125 * 1e-6), rtol=1e-12)

    def test_pii_right_is_airy(self):
        tail = tail_series("PII", "right")
        assert tail.evaluate(8.0) == specfun.airy_Ai(8.0)
        assert tail.evaluate(8.0, 1) == specfun.airy_Ai_prime(8.0)

    @pytest.mark.parametrize("side, sign", [("right", 1.0), ("left", -1.0)])
    def test_pi2_leading_coefficients(self, side, sign):
        T = 1.0
        coeffs = tail_series("PI2", side, T=T).coeffs
        assert_allclose(coeffs[:3], [-sign, 0.0, -2.0 * T * sign], atol=1e-15)

    def test_truncation_reported(self):
        assert tail_series("PII", "left", at=-10.0).truncation > 1
        assert tail_series("PI2", "left", T=0.5, at=-60.0).truncation > 3

    def test_pi2_derivative_matches_finite_difference(self):
        tail = tail_series("PI2", "right", T=0.5)
        X, h = 50.0, 1e-4
        fd = (tail.evaluate(X + h) - tail.evaluate(X - h)) / (2 * h)
        assert_allclose(tail.evaluate(X, 1), fd, rtol=1e-7)

    def test_rejects_bad_input(self):
        with pytest.raises(DomainError):
            tail_series("PII", "up")
        with pytest.raises(DomainError):
            tail_series("PIII", "left")
        with pytest.raises(DomainError):
            tail_series("PII", "left").evaluate(3.0)
        with pytest.raises(DomainError):
            tail_series("PI2", "left").evaluate(-3.0, 2)


class TestHastingsMcLeod:

    def test_positive_and_decreasing(self, hm_solution):
        s = np.linspace(-10.0, 10.0, 401)
        q = hm_solution.evaluate(s)
        assert np.all(q > 0)
        assert np.all(np.diff(q) < 0)

    def test_residual(self, hm_solution):
        assert hm_solution.residual < 1e-10

    def test_value_at_origin(self, hm_solution):
        assert hm_solution.evaluate(0.0) == pytest.approx(0.3670615515, abs=1e-8)

    def test_independent_solve_on_shifted_domain(self, hm_solution):
        other = solve_hastings_mcleod(-12.0, 9.0, Nc=192)
        s = np.array([-4.0, 0.0, 2.5])
        assert_allclose(other.evaluate(s), hm_solution.evaluate(s), atol=1e-9)

    def test_left_tail_agreement(self, hm_solution):
        tail = tail_series("PII", "left")
        assert_allclose(hm_solution.evaluate(-8.0), tail.evaluate(-8.0), rtol=1e-8)

    def test_right_tail_agreement(self, hm_solution):
        assert_allclose(hm_solution.evaluate(6.0), specfun.airy_Ai(6.0), rtol=1e-5)

    def test_outside_domain_uses_tails(self, hm_solution):
        assert hm_solution.evaluate(12.0) == specfun.airy_Ai(12.0)

    @pytest.mark.parametrize("kwargs", [
        {'x_l': -5.0},
        {'x_r': 5.0},
        {'Nc': 64},
    ])
    def test_rejects_setup(self, kwargs):
        with pytest.raises(DomainError):
            solve_hastings_mcleod(**kwargs)


class TestAuxiliary:

    def test_p_derivative(self, hm_solution):
        h = 1e-4
        q, _, _ = hm_auxiliary(hm_solution, 0.0)
        dp = (hm_auxiliary(hm_solution, h)[2] - hm_auxiliary(hm_solution, -h)[2]) / (2 * h)
        assert abs(dp + q * q) < 1e-7

    def test_p_decays_on_the_right(self, hm_solution):
        assert abs(hm_auxiliary(hm_solution, 8.0)[2]) < 1e-6

    def test_nodal_p_matches(self, hm_solution):
        s = hm_solution.x[40]
        assert_allclose(hm_auxiliary(hm_solution, s)[2], hm_solution.derivs["p"][40], atol=1e-10)

    def test_rejects_outside(self, hm_solution):
        with pytest.raises(DomainError):
            hm_auxiliary(hm_solution, 20.0)


class TestPI2:

    def test_bounded_at_origin(self, pi2_zero):
        assert abs(pi2_zero.evaluate(0.0)) < 1.0
        assert pi2_zero.residual < 1e-9

    def test_pole_free_certificate(self, pi2_minus_one):
        X, U = pi2_minus_one.x, pi2_minus_one.values
        assert np.all(np.abs(U) < 2.0 * np.abs(X) ** (1.0 / 3.0) + 5.0)

    @pytest.mark.parametrize("X", [-40.0, 40.0])
    def test_tail_agreement(self, pi2_minus_one, X):
        T = -1.0
        U = pi2_minus_one.evaluate(X)
        sign = math.copysign(1.0, X)
        two_term = -sign * abs(X) ** (1 / 3) - 2 * T * sign * abs(X) ** (-1 / 3)
        assert abs(U - two_term) < 1e-2
        tail = pi2_minus_one.right_tail if X > 0 else pi2_minus_one.left_tail
        assert abs(U - tail.evaluate(X)) < 1e-7

    def test_nodal_derivatives_stored(self, pi2_zero):
        assert set(pi2_zero.derivs) == {"UX", "UXX", "UXXX", "UXXXX", "Q"}

    @pytest.mark.parametrize("kwargs", [
        {'Nc': 128},
        {'x_l': 1.0, 'x_r': 60.0},
    ])
    def test_rejects_setup(self, kwargs):
        with pytest.raises(DomainError):
            solve_pi2(0.0, **kwargs)

    @pytest.mark.slow
    def test_family(self):
        family = solve_pi2_family([-2.0, -1.0, 0.0, 1.0, 2.0])
        assert sorted(family) == [-2.0, -1.0, 0.0, 1.0, 2.0]
        for sol in family.values():
            assert sol.residual < 1e-9


class TestQ:

    def test_derivative_is_U(self, pi2_zero):
        h = 1e-3
        for X in (-3.0, 0.5, 7.0):
            dQ = (pi2_Q(pi2_zero, X + h) - pi2_Q(pi2_zero, X - h)) / (2 * h)
            assert abs(dQ - pi2_zero.evaluate(X)) < 1e-5

    def test_far_left_balance(self, pi2_zero):
        X = -40.0
        assert_allclose(pi2_Q(pi2_zero, X), -0.75 * abs(X) ** (4 / 3), rtol=1e-2)

    def test_rejects_outside(self, pi2_zero):
        with pytest.raises(DomainError):
            pi2_Q(pi2_zero, 100.0)

    def test_solution_satisfies_kdv(self, pi2_zero):
        delta = 1e-3
        plus = run_cache.fetch_pi2(delta)
        minus = run_cache.fetch_pi2(-delta)
        X = np.linspace(-4.0, 4.0, 5)
        U_T = (plus.evaluate(X) - minus.evaluate(X)) / (2 * delta)
        U, U_X, U_XXX = (pi2_zero.evaluate(X, m) for m in (0, 1, 3))
        assert np.max(np.abs(U_T + 6 * U * U_X + U_XXX)) < 1e-4
