"""Tests for the Whitham modulation machinery and the confluent edges."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import integrate

from modules.whitham import (
    elliptic_data, hodograph_residual, q_phase, q_phase_grad, solve_leading_edge,
    solve_trailing_edge, solve_whitham_zone, theta_vu, weak_limit, whitham_velocities,
)
from utils.errors import DomainError

BETA = (-0.2, -0.5, -0.8)


class TestTheta:

    def test_confluent_arguments(self, sech2):
        u = -0.4
        assert_allclose(theta_vu(u, u, sech2), sech2.f_L(u, 1), rtol=1e-12)

    def test_against_adaptive_quadrature(self, sech2):
        v, u = -0.9, -0.3
        oracle, _ = integrate.quad(lambda s: sech2.f_L((1 - s * s) * v + s * s * u, 1), 0.0, 1.0,
                                   epsabs=1e-13, epsrel=1e-13)
        assert abs(theta_vu(v, u, sech2) - oracle) < 1e-10

    def test_v_derivative_matches_finite_difference(self, sech2):
        v, u, h = -0.85, -0.35, 1e-5
        fd = (theta_vu(v + h, u, sech2) - theta_vu(v - h, u, sech2)) / (2 * h)
        assert_allclose(theta_vu(v, u, sech2, dv=1), fd, rtol=1e-7)

    def test_array_arguments(self, sech2):
        v = np.array([-0.9, -0.8])
        out = theta_vu(v, np.full(2, -0.3), sech2)
        assert out.shape == (2,)
        assert_allclose(out[1], theta_vu(-0.8, -0.3, sech2), rtol=1e-14)

    def test_rejects_high_order(self, sech2):
        with pytest.raises(DomainError):
            theta_vu(-0.8, -0.3, sech2, dv=2, du=2)


class TestPhase:

    def test_collapsed_triple(self, sech2):
        b = -0.45
        assert_allclose(q_phase(b, b, b, sech2), sech2.f_L(b), atol=1e-10)

    def test_against_adaptive_quadrature(self, sech2):
        b1, b2, b3 = BETA

        def integrand(s, phi):
            top = 0.5 * ((1 + math.cos(phi)) * b1 + (1 - math.cos(phi)) * b2)
            return sech2.f_L((1 - s * s) * top + s * s * b3) / math.pi

        oracle, _ = integrate.dblquad(integrand, 0.0, math.pi, 0.0, 1.0, epsabs=1e-12, epsrel=1e-12)
        assert abs(q_phase(*BETA, sech2) - oracle) < 1e-8

    def test_gradient_matches_finite_differences(self, sech2):
        q, grad = q_phase_grad(BETA, sech2)
        assert q == pytest.approx(q_phase(*BETA, sech2), abs=1e-12)
        h = 1e-6
        for i in range(3):
            plus, minus = list(BETA), list(BETA)
            plus[i] += h
            minus[i] -= h
            fd = (q_phase(*plus, sech2) - q_phase(*minus, sech2)) / (2 * h)
            assert_allclose(grad[i], fd, rtol=1e-5)

    def test_wrapped_form_continuous_at_hump_minimum(self, sech2):
        b1, b2 = -0.3, -0.6
        plain = q_phase(b1, b2, sech2.umin, sech2, check=False)
        wrapped = q_phase(b1, b2, sech2.umin, sech2, wrapped=True, check=False)
        assert_allclose(wrapped, plain, rtol=1e-12)

    def test_rejects_unordered(self, sech2):
        with pytest.raises(DomainError):
            q_phase(-0.5, -0.2, -0.8, sech2)

    def test_rejects_below_minimum(self, sech2):
        with pytest.raises(DomainError):
            q_phase(-0.2, -0.5, -1.2, sech2)


class TestVelocities:

    def test_ordering(self):
        v1, v2, v3 = whitham_velocities(*BETA)
        assert v1 > v2 > v3

    def test_soft_edge_limit(self):
        b1, b3 = -0.2, -0.8
        v1, _, _ = whitham_velocities(b1, b3 + 1e-8, b3)
        assert abs(v1 - 6 * b1) < 1e-5

    def test_soliton_edge_limit(self):
        b1, b3 = -0.2, -0.8
        v1, v2, _ = whitham_velocities(b1, b1 - 1e-8, b3)
        assert abs(v1 - v2) < 1e-4

    def test_rejects_confluent_input(self):
        with pytest.raises(DomainError):
            whitham_velocities(-0.2, -0.2, -0.8)

    def test_elliptic_data(self):
        s, K, E, alpha = elliptic_data(BETA)
        assert_allclose(s * s, 0.3 / 0.6)
        assert_allclose(alpha, -BETA[0] + 0.6 * E / K, rtol=1e-14)


class TestWeakLimit:

    def test_edges_reduce_to_outer_value(self):
        assert weak_limit((-0.2, -0.5, -0.5)) == pytest.approx(-0.2)
        assert weak_limit((-0.5, -0.5, -0.8)) == pytest.approx(-0.8)
        assert weak_limit((-0.4, -0.4, -0.4)) == pytest.approx(-0.4)

    def test_lies_inside_oscillation_range(self):
        b1, b2, b3 = BETA
        mean = weak_limit(BETA)
        assert b1 - b2 + b3 < mean < b1 + b2 - b3


class TestHodograph:

    def test_collapsed_reduces_to_hopf(self, sech2):
        u, t = -0.5, 0.1
        x = 6 * t * u + sech2.f_L(u)
        assert_allclose(hodograph_residual((u, u, u), x, t, sech2), np.zeros(3), atol=1e-12)

    def test_initial_time_is_inverse_profile(self, sech2):
        u = -0.7
        res = hodograph_residual((u, u, u), sech2.f_L(u), 0.0, sech2)
        assert np.max(np.abs(res)) < 1e-12

    def test_rejects_unordered(self, sech2):
        with pytest.raises(DomainError):
            hodograph_residual((-0.8, -0.5, -0.2), 0.0, 0.3, sech2)


class TestEdges:

    def test_leading_edge_at_test_time(self, edges_04, sech2):
        lead = edges_04[0]
        assert lead.u > lead.v
        assert lead.c > 0
        assert lead.residual < 1e-10
        assert abs(6 * lead.t + theta_vu(lead.v, lead.u, sech2)) < 1e-10
        assert lead.beta == (lead.u, lead.v, lead.v)

    def test_trailing_edge_at_test_time(self, edges_04):
        trail = edges_04[1]
        assert trail.v > trail.u
        assert trail.gamma > 0
        assert trail.residual < 1e-10
        assert trail.beta == (trail.v, trail.v, trail.u)

    def test_zone_is_ordered(self, edges_04):
        lead, trail = edges_04
        assert lead.x_edge < trail.x_edge

    def test_edge_positions_shortly_after_breaking(self, sech2):
        assert solve_leading_edge(0.23, sech2).x_edge == pytest.approx(-1.6051, abs=1e-3)
        assert solve_trailing_edge(0.23, sech2).x_edge == pytest.approx(-1.5757, abs=1e-3)

    def test_edges_collapse_at_catastrophe(self, sech2, sech2_cp):
        t = sech2_cp.tc + 1e-6
        for edge in (solve_leading_edge(t, sech2), solve_trailing_edge(t, sech2)):
            assert abs(edge.x_edge - sech2_cp.xc) < 1e-2
            assert abs(edge.u - sech2_cp.uc) < 1e-2
            assert abs(edge.v - sech2_cp.uc) < 1e-2

    @pytest.mark.parametrize("solver, coefficient", [
        (solve_leading_edge, -12.0 * math.sqrt(3.0)),
        (solve_trailing_edge, 4.0 * math.sqrt(15.0) / 9.0),
    ])
    def test_edge_offset_rate(self, sech2, sech2_cp, solver, coefficient):
        cp = sech2_cp
        taus = np.array([1e-5, 3e-5, 1e-4])
        offsets = np.array([solver(cp.tc + tau, sech2).x_edge - cp.xc - 6 * cp.uc * tau for tau in taus])
        slope = np.polyfit(np.log(taus), np.log(np.abs(offsets)), 1)[0]
        assert slope == pytest.approx(1.5, abs=0.05)
        scaled = offsets[0] * math.sqrt(cp.k) / taus[0] ** 1.5
        assert scaled == pytest.approx(coefficient, rel=0.1)

    def test_rejects_before_breaking(self, sech2):
        with pytest.raises(DomainError):
            solve_leading_edge(0.2, sech2)
        with pytest.raises(DomainError):
            solve_trailing_edge(0.2, sech2)


@pytest.mark.slow
class TestZone:

    def test_confluent_endpoints(self, zone_04):
        beta = zone_04.beta
        assert abs(beta[1, 0] - beta[2, 0]) < 1e-8
        assert abs(beta[0, -1] - beta[1, -1]) < 1e-8

    def test_halves_agree_at_midpoint(self, zone_04):
        assert np.max(np.abs(zone_04.beta_left[:, 0] - zone_04.beta_right[:, -1])) < 1e-6

    def test_interior_ordering_and_monotonicity(self, zone_04):
        beta = zone_04.beta[:, 1:-1]
        assert np.all(beta[0] > beta[1]) and np.all(beta[1] > beta[2])
        assert np.all(np.diff(zone_04.beta[1]) > 0)
        assert np.all(np.diff(zone_04.beta[2]) < 0)
        d1 = np.diff(zone_04.beta[0])
        assert np.all(d1 >= 0) or np.all(d1 <= 0)

    def test_node_residuals(self, zone_04):
        assert np.max(zone_04.residuals[1:-1]) < 1e-8

    def test_chebyshev_tail(self, zone_04):
        assert zone_04.tail() < 1e-6

    def test_square_root_at_leading_edge(self, zone_04):
        x, beta = zone_04.x, zone_04.beta
        dx = x[1:6] - zone_04.xminus
        gap = beta[1, 1:6] - beta[2, 1:6]
        slope = np.polyfit(np.log(dx), np.log(gap), 1)[0]
        assert slope == pytest.approx(0.5, abs=0.05)

    def test_off_grid_evaluation(self, zone_04, sech2):
        x = zone_04.xminus + 0.37 * zone_04.width
        beta = zone_04.evaluate(x)
        assert np.max(np.abs(hodograph_residual(beta, x, zone_04.t, sech2))) < 1e-6

    def test_residual_responds_linearly(self, zone_04, sech2):
        j = zone_04.Nc // 2
        x, beta = zone_04.x[j], zone_04.beta[:, j].copy()
        base = hodograph_residual(beta, x, zone_04.t, sech2)
        steps = []
        for h in (1e-4, 2e-4):
            moved = beta.copy()
            moved[0] += h
            steps.append(hodograph_residual(moved, x, zone_04.t, sech2)[0] - base[0])
        assert steps[1] / steps[0] == pytest.approx(2.0, rel=0.05)

    def test_evaluate_rejects_outside(self, zone_04):
        with pytest.raises(DomainError):
            zone_04.evaluate(zone_04.xplus + 1.0)

    def test_rejects_coarse_grid(self, sech2):
        with pytest.raises(DomainError):
            solve_whitham_zone(0.4, sech2, Nc=8)
