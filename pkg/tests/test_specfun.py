"""Tests for the special functions module.

Oracles are adaptive quadrature (scipy.integrate.quad), closed forms and
redundant summation of the theta series.
"""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import integrate

from modules import specfun
from utils.errors import ConvergenceError, DomainError


class TestEllipticIntegrals:
    """K(s), K'(s) and E(s) of the modulus s."""

    def test_K_at_zero(self):
        assert_allclose(specfun.elliptic_K(0.0), math.pi / 2, rtol=1e-15)

    def test_K_against_quadrature(self):
        s = 0.5
        oracle, _ = integrate.quad(lambda p: 1.0 / math.sqrt(1.0 - s * s * math.sin(p) ** 2),
                                   0.0, math.pi / 2, epsabs=1e-15, epsrel=1e-15)
        assert_allclose(specfun.elliptic_K(s), oracle, rtol=1e-14)

    def test_K_log_singularity(self):
        s = 1.0 - 1e-6
        assert_allclose(specfun.elliptic_K(s), 0.5 * math.log(8.0 / (1.0 - s)), rtol=1e-3)

    def test_K_increasing(self):
        s = np.linspace(0.0, 0.999, 50)
        assert np.all(np.diff(specfun.elliptic_K(s)) > 0)

    def test_E_endpoints(self):
        assert_allclose(specfun.elliptic_E(0.0), math.pi / 2, rtol=1e-15)
        assert_allclose(specfun.elliptic_E(1.0), 1.0, rtol=1e-15)

    def test_E_against_quadrature(self):
        s = 0.7
        oracle, _ = integrate.quad(lambda p: math.sqrt(1.0 - s * s * math.sin(p) ** 2),
                                   0.0, math.pi / 2, epsabs=1e-15, epsrel=1e-15)
        assert_allclose(specfun.elliptic_E(s), oracle, rtol=1e-14)

    def test_complement_matches_K_of_complementary_modulus(self):
        s = 0.3
        assert_allclose(specfun.elliptic_K_complement(s), specfun.elliptic_K(math.sqrt(1 - s * s)), rtol=1e-13)

    @pytest.mark.parametrize("s", [0.1 * n for n in range(1, 10)])
    def test_legendre_relation(self, s):
        sp = math.sqrt(1.0 - s * s)
        K, Kp = specfun.elliptic_K(s), specfun.elliptic_K(sp)
        E, Ep = specfun.elliptic_E(s), specfun.elliptic_E(sp)
        assert abs(E * Kp + Ep * K - K * Kp - math.pi / 2) < 1e-13

    @pytest.mark.parametrize("s", [-0.1, 1.0, float('nan')])
    def test_K_rejects_bad_modulus(self, s):
        with pytest.raises(DomainError):
            specfun.elliptic_K(s)

    def test_complement_rejects_zero(self):
        with pytest.raises(DomainError):
            specfun.elliptic_K_complement(0.0)


class TestJacobi:
    """dn and the sn, cn, dn triple."""

    def test_dn_at_zero(self):
        for s in (0.0, 0.3, 0.9):
            assert specfun.jacobi_dn(0.0, s) == pytest.approx(1.0, abs=1e-15)

    def test_dn_at_quarter_period(self):
        s = 0.6
        assert_allclose(specfun.jacobi_dn(specfun.elliptic_K(s), s), math.sqrt(1 - s * s), atol=1e-13)

    def test_sech_limit(self):
        assert_allclose(specfun.jacobi_dn(2.0, 1.0 - 1e-10), 1.0 / math.cosh(2.0), atol=1e-6)

    def test_exact_sech_fallback(self):
        z = np.linspace(-3, 3, 7)
        assert_allclose(specfun.jacobi_dn(z, 1.0), 1.0 / np.cosh(z), rtol=1e-15)

    def test_dn_sn_identity(self):
        s = 0.8
        z = np.linspace(-5.0, 5.0, 201)
        sn, _, dn = specfun.jacobi_sn_cn_dn(z, s)
        assert np.max(np.abs(dn ** 2 + s * s * sn ** 2 - 1.0)) < 1e-12

    def test_scalar_in_scalar_out(self):
        sn, cn, dn = specfun.jacobi_sn_cn_dn(0.4, 0.5)
        assert all(isinstance(v, float) for v in (sn, cn, dn))


class TestTheta:
    """Theta function series and its logarithmic derivatives."""

    @staticmethod
    def _direct(z, t, nmax=60):
        n = np.arange(-nmax, nmax + 1)
        return float(np.sum(np.exp(-math.pi * t * n * n) * np.cos(2 * math.pi * n * z)))

    def test_value_at_zero_for_tau_i(self):
        assert_allclose(specfun.theta3(0.0, 1j), self._direct(0.0, 1.0, 240), rtol=1e-14)

    @pytest.mark.parametrize("t", [0.05, 0.3, 0.99, 1.0, 2.5])
    def test_gaussian_and_direct_forms_agree(self, t):
        z = np.linspace(-0.7, 0.7, 15)
        oracle = np.array([self._direct(zz, t, 400) for zz in z])
        assert_allclose(specfun.theta3(z, 1j * t), oracle, rtol=1e-12)

    def test_half_period_zero(self):
        tau = 1j
        value = specfun.theta3(0.5 + tau / 2, tau)
        assert abs(value) < 1e-12

    def test_periodicity(self):
        tau = 0.8j
        assert abs(specfun.theta3(1.3, tau) - specfun.theta3(0.3, tau)) < 1e-14

    def test_heat_equation(self):
        # d theta / d tau = (1 / (4 pi i)) d^2 theta / dz^2, along tau = i t
        z, t, h = 0.17, 0.9, 1e-4
        dtheta_dt = (specfun.theta3(z, 1j * (t + h)) - specfun.theta3(z, 1j * (t - h))) / (2 * h)
        _, r1, r2 = specfun.log_theta3_derivs(z, 1j * t)
        theta = specfun.theta3(z, 1j * t)
        d2 = theta * (r2 + r1 * r1)
        # d/dt = i d/dtau
        assert abs(dtheta_dt - 1j * d2 / (4j * math.pi)) < 1e-6

    def test_log_derivatives_against_finite_differences(self):
        tau, z, h = 0.6j, 0.21, 1e-5
        _, r1, r2 = specfun.log_theta3_derivs(z, tau)
        f = lambda zz: math.log(specfun.theta3(zz, tau))
        assert_allclose(r1, (f(z + h) - f(z - h)) / (2 * h), rtol=1e-7)
        assert_allclose(r2, (f(z + h) - 2 * f(z) + f(z - h)) / h ** 2, rtol=1e-4)

    def test_rejects_lower_half_plane(self):
        with pytest.raises(ConvergenceError):
            specfun.theta3(0.0, -1j)

    def test_rejects_real_part(self):
        with pytest.raises(DomainError):
            specfun.theta3(0.0, 0.5 + 1j)


class TestAiryAndHermite:
    """Ai(s) and the Hermite constants h_j."""

    def test_ai_at_zero(self):
        oracle = 3.0 ** (-2.0 / 3.0) / math.gamma(2.0 / 3.0)
        assert_allclose(specfun.airy_Ai(0.0), oracle, rtol=1e-14)

    @pytest.mark.parametrize("s", [-2.0, 2.0])
    def test_ai_ode(self, s):
        h = 1e-3
        d2 = (specfun.airy_Ai(s + h) - 2 * specfun.airy_Ai(s) + specfun.airy_Ai(s - h)) / h ** 2
        assert abs(d2 - s * specfun.airy_Ai(s)) < 1e-6

    def test_ai_asymptotics(self):
        s = 10.0
        leading = math.exp(-2.0 / 3.0 * s ** 1.5) / (2 * math.sqrt(math.pi) * s ** 0.25)
        # two corrections of the asymptotic series
        zeta = 2.0 / 3.0 * s ** 1.5
        assert_allclose(specfun.airy_Ai(s), leading * (1 - 5.0 / (72.0 * zeta) + 385.0 / (10368.0 * zeta ** 2)),
                        rtol=2e-5)

    def test_ai_prime_matches_finite_difference(self):
        h = 1e-5
        fd = (specfun.airy_Ai(0.7 + h) - specfun.airy_Ai(0.7 - h)) / (2 * h)
        assert_allclose(specfun.airy_Ai_prime(0.7), fd, rtol=1e-8)

    def test_hermite_first_values(self):
        assert_allclose(specfun.hermite_norm(0), math.pi ** -0.25, rtol=1e-15)
        assert_allclose(specfun.hermite_norm(1), math.sqrt(2) * math.pi ** -0.25, rtol=1e-15)

    def test_hermite_direct_product(self):
        j = 10
        oracle = 2.0 ** (j / 2) / (math.pi ** 0.25 * math.sqrt(math.factorial(j)))
        assert_allclose(specfun.hermite_norm(j), oracle, rtol=1e-13)

    @pytest.mark.parametrize("j", [-1, 2.5, 171])
    def test_hermite_rejects(self, j):
        with pytest.raises(DomainError):
            specfun.hermite_norm(j)
