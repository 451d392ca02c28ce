"""Tests for the asymptotic evaluators and the connection formulas."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from modules import specfun
from modules.asymptotics import (
    PII_C0, PII_C1, S_LEADING, S_TRAILING, SOLITON_C0, catastrophe_approx,
    catastrophe_coordinates, catastrophe_correction, catastrophe_frame, connection_algebraic,
    connection_elliptic, connection_pii, connection_selfsimilar, connection_soliton, connection_vars,
    hopf_approx, leading_edge_approx, leading_edge_frame, leading_edge_modulated, one_phase_approx,
    one_phase_params, one_phase_value, soliton_train, trailing_edge_approx,
)
from modules.hopf import critical_point, cubic_profile, hopf_field, hopf_solve
from modules.kdv_spectral import cnoidal_profile
from modules.whitham import weak_limit
from utils import run_cache
from utils.errors import DomainError

BETA = (-0.2, -0.5, -0.8)


@pytest.fixture(scope="module")
def pi2solver():
    return run_cache.fetch_pi2


def shifted_point(cp, S, tau):
    """Position whose similarity variable is S at t = tc + tau."""
    return cp.xc + 6.0 * cp.uc * tau + S * abs(tau) ** 1.5 / math.sqrt(cp.k)


class TestHopfApprox:

    def test_single_valued_before_breaking(self, sech2):
        x = np.linspace(-4.0, 4.0, 21)
        assert_allclose(hopf_approx(x, 0.1, sech2), hopf_field(x, 0.1, sech2), atol=1e-12)

    def test_needs_edges_after_breaking(self, sech2):
        with pytest.raises(DomainError):
            hopf_approx(np.linspace(-3.0, 1.0, 41), 0.4, sech2)

    def test_branch_split_at_zone_midpoint(self, sech2, edges_04):
        lead, trail = edges_04
        mid = 0.5 * (lead.x_edge + trail.x_edge)
        x = np.array([lead.x_edge - 0.5, mid - 1e-3, mid + 1e-3, trail.x_edge + 0.5])
        out = hopf_approx(x, 0.4, sech2, edges_04)
        assert_allclose(out[:2], hopf_field(x[:2], 0.4, sech2, "left"), atol=1e-12)
        assert_allclose(out[2:], hopf_field(x[2:], 0.4, sech2, "right"), atol=1e-12)


class TestOnePhase:

    def test_dn_and_theta_forms_agree(self):
        x = np.linspace(-0.3, 0.3, 41)
        for xv in x:
            dn = one_phase_value(xv, 0.4, 1e-2, BETA, 0.37, "dn")
            theta = one_phase_value(xv, 0.4, 1e-2, BETA, 0.37, "theta")
            assert abs(dn - theta) < 1e-10

    def test_constant_branches_give_travelling_wave(self):
        eps, t = 0.1, 0.3
        x = np.linspace(-1.0, 1.0, 17)
        values = [one_phase_value(xv, t, eps, BETA, 0.0) for xv in x]
        assert_allclose(values, cnoidal_profile(x, t, BETA, eps), atol=1e-13)

    def test_degenerate_modulus_gives_weak_limit(self):
        beta = (-0.2, -0.5, -0.5)
        assert one_phase_value(0.1, 0.4, 1e-2, beta, 0.0) == weak_limit(beta)

    def test_params(self):
        p = one_phase_params(BETA, 0.5, 0.4, 1e-2, 0.1)
        assert_allclose(p.s, math.sqrt(0.5))
        assert p.tau.real == 0.0 and p.tau.imag == pytest.approx(1.0, abs=1e-14)
        expected = math.sqrt(0.6) / (2e-2 * p.K) * (0.5 - 0.8 * sum(BETA) - 0.1)
        assert_allclose(p.Omega, expected, rtol=1e-14)

    def test_rejects_bad_input(self):
        with pytest.raises(DomainError):
            one_phase_params((-0.5, -0.2, -0.8), 0.0, 0.4, 1e-2, 0.0)
        with pytest.raises(DomainError):
            one_phase_value(0.0, 0.4, 1e-2, BETA, 0.0, form="cn")

    @pytest.mark.slow
    def test_forms_agree_across_zone(self, zone_04, sech2):
        x = zone_04.xminus + zone_04.width * np.linspace(0.2, 0.8, 7)
        dn = one_phase_approx(x, 0.4, 1e-2, zone_04, sech2, "dn")
        theta = one_phase_approx(x, 0.4, 1e-2, zone_04, sech2, "theta")
        assert np.max(np.abs(dn - theta)) < 1e-8


class TestLeadingEdge:

    def _far_left(self, edge, eps, s=40.0):
        return edge.x_edge - s * edge.c ** (1 / 3) * math.sqrt(edge.u - edge.v) * eps ** (2 / 3)

    def test_far_left_reduces_to_taylor_pair(self, edges_04, hm_solution, sech2):
        lead, eps = edges_04[0], 1e-3
        x = self._far_left(lead, eps)
        slope = 6 * lead.t + sech2.f_L(lead.u, 1)
        full = leading_edge_approx(x, 0.4, eps, lead, hm_solution, sech2)
        assert_allclose(full, lead.u + (x - lead.x_edge) / slope, atol=1e-12)
        short = leading_edge_approx(x, 0.4, eps, lead, hm_solution, sech2, include_order23=False)
        assert_allclose(short, lead.u, atol=1e-12)

    def test_modulated_form_far_left(self, edges_04, hm_solution, sech2):
        lead, eps = edges_04[0], 1e-3
        x = self._far_left(lead, eps)
        assert_allclose(leading_edge_modulated(x, 0.4, eps, lead, hm_solution, sech2),
                        leading_edge_approx(x, 0.4, eps, lead, hm_solution, sech2), atol=1e-12)

    def test_frame_origin(self, edges_04, hm_solution, sech2):
        lead = edges_04[0]
        frame = leading_edge_frame(lead.x_edge, 1e-2, lead, hm_solution, sech2)
        assert frame.s[0] == 0.0
        assert_allclose(frame.q[0], hm_solution.evaluate(0.0), rtol=1e-14)
        value = leading_edge_approx(lead.x_edge, 0.4, 1e-2, lead, hm_solution, sech2)
        assert math.isfinite(value)

    def test_amplitude_bound(self, edges_04, hm_solution, sech2):
        lead, eps = edges_04[0], 1e-2
        x = lead.x_edge + np.linspace(-0.05, 0.05, 101)
        short = leading_edge_approx(x, 0.4, eps, lead, hm_solution, sech2, include_order23=False)
        frame = leading_edge_frame(x, eps, lead, hm_solution, sech2)
        bound = 4 * eps ** (1 / 3) / lead.c ** (1 / 3) * frame.q
        assert np.all(np.abs(short - lead.u) <= bound + 1e-12)

    def test_rejects_mismatched_inputs(self, edges_04, hm_solution, sech2):
        lead, trail = edges_04
        with pytest.raises(DomainError):
            leading_edge_approx(lead.x_edge, 0.3, 1e-2, lead, hm_solution, sech2)
        with pytest.raises(DomainError):
            leading_edge_frame(trail.x_edge, 1e-2, trail, hm_solution, sech2)


class TestTrailingEdge:

    def test_hopf_value_right_of_edge(self, edges_04):
        trail = edges_04[1]
        value = trailing_edge_approx(trail.x_edge + 1.0, 0.4, 1e-4, trail)
        assert abs(value - trail.u) < 1e-10

    def test_pulse_spacing(self, edges_04):
        trail, eps = edges_04[1], 1e-2
        train = soliton_train(np.array([trail.x_edge - 0.01]), eps, trail)
        spacing = np.diff(train.X[:, 0])
        j = np.arange(1, train.X.shape[0])
        expected = 0.5 * math.log(eps) - np.log(train.h[j] / train.h[j - 1]) - math.log(train.gamma)
        assert_allclose(spacing, expected, atol=1e-12)

    def test_first_pulse_reaches_full_amplitude(self, edges_04):
        trail, eps = edges_04[1], 1e-2
        log_eps = math.log(eps)
        y0 = 0.5 - 2 * (math.log(math.sqrt(2 * math.pi) * specfun.hermite_norm(0))
                        + 0.5 * math.log(trail.gamma)) / log_eps
        x0 = trail.x_edge + y0 * eps * log_eps / (2 * math.sqrt(trail.v - trail.u))
        train = soliton_train(x0, eps, trail)
        assert abs(train.X[0, 0]) < 1e-10
        value = trailing_edge_approx(x0, 0.4, eps, trail)
        assert value >= 2 * trail.v - trail.u - 1e-12

    def test_rejects_bad_input(self, edges_04):
        lead, trail = edges_04
        with pytest.raises(DomainError):
            soliton_train(trail.x_edge, 1.5, trail)
        with pytest.raises(DomainError):
            soliton_train(lead.x_edge, 1e-2, lead)
        with pytest.raises(DomainError):
            trailing_edge_approx(trail.x_edge, 0.3, 1e-2, trail)


class TestCatastrophe:

    def test_coordinates_at_origin(self, sech2_cp):
        X, T = catastrophe_coordinates(sech2_cp.xc, sech2_cp.tc, 1e-2, sech2_cp)
        assert abs(X) < 1e-12 and T == 0.0

    def test_value_at_origin(self, sech2_cp, pi2solver):
        eps, cp = 1e-2, sech2_cp
        value = catastrophe_approx(cp.xc, cp.tc, eps, cp, pi2solver)
        expected = cp.uc + (eps / cp.k) ** (2 / 7) * pi2solver(0.0).evaluate(0.0)
        assert_allclose(value, expected, atol=1e-12)

    def test_higher_order_adds_bracket(self, sech2, sech2_cp, pi2solver):
        eps, cp = 1e-2, sech2_cp
        x = cp.xc + np.linspace(-0.1, 0.1, 9)
        second = catastrophe_approx(x, cp.tc, eps, cp, pi2solver)
        fourth = catastrophe_approx(x, cp.tc, eps, cp, pi2solver, order=4, profile=sech2)
        frame = catastrophe_frame(x, cp.tc, eps, cp, pi2solver)
        ratio = sech2.f_L(cp.uc, 4) / sech2.f_L(cp.uc, 3)
        expected = -(eps / cp.k) ** (4 / 7) * ratio / 63 * catastrophe_correction(frame)
        assert_allclose(fourth - second, expected, atol=1e-13)

    def test_rejects_bad_input(self, sech2_cp, pi2solver):
        cp, eps = sech2_cp, 1e-2
        with pytest.raises(DomainError):
            catastrophe_approx(cp.xc, cp.tc, eps, cp, pi2solver, order=3)
        with pytest.raises(DomainError):
            catastrophe_approx(cp.xc, cp.tc, eps, cp, pi2solver, order=4)
        with pytest.raises(DomainError):
            catastrophe_approx(cp.xc, cp.tc + 11 * cp.k ** (3 / 7) * eps ** (4 / 7), eps, cp, pi2solver)
        with pytest.raises(DomainError):
            catastrophe_approx(cp.xc + 100 * cp.k ** (1 / 7) * eps ** (6 / 7), cp.tc, eps, cp, pi2solver)


class TestAlgebraicConnection:

    @pytest.mark.parametrize("S, tau", [(10.0, 0.01), (-30.0, 0.01), (5.0, -0.01), (-3.0, -0.02)])
    def test_root_solves_cubic(self, sech2_cp, S, tau):
        cp = sech2_cp
        x = shifted_point(cp, S, tau)
        z = (connection_algebraic(x, cp.tc + tau, cp) - cp.uc) / math.sqrt(abs(tau) / cp.k)
        if tau > 0:
            assert abs(z ** 3 - 6 * z + S) < 1e-9
        else:
            assert abs(z ** 3 + 6 * z + S) < 1e-9

    @pytest.mark.parametrize("S", [10.0, -30.0])
    def test_coincides_with_hopf_for_cubic_data(self, S):
        profile = cubic_profile(2.0, -0.3)
        cp = critical_point(profile)
        t = 0.01
        x = shifted_point(cp, S, t)
        assert_allclose(connection_algebraic(x, t, cp), hopf_solve(x, t, profile), atol=1e-10)

    def test_at_catastrophe_time(self, sech2_cp):
        cp = sech2_cp
        x = cp.xc + np.array([-0.1, 0.05])
        assert_allclose(connection_algebraic(x, cp.tc, cp), cp.uc - np.cbrt((x - cp.xc) / cp.k), atol=1e-15)

    def test_cube_root_growth(self, sech2_cp):
        cp, tau = sech2_cp, 0.01
        S = np.array([1e6, 1e8])
        z = [abs(connection_algebraic(shifted_point(cp, s, tau), cp.tc + tau, cp) - cp.uc) for s in S]
        slope = math.log(z[1] / z[0]) / math.log(S[1] / S[0])
        assert slope == pytest.approx(1 / 3, abs=0.01)

    def test_continuous_with_trailing_self_similar_value(self, sech2_cp):
        cp, tau = sech2_cp, 0.01
        x = shifted_point(cp, S_TRAILING + 1e-6, tau)
        z = (connection_algebraic(x, cp.tc + tau, cp) - cp.uc) / math.sqrt(tau / cp.k)
        b3 = connection_selfsimilar(S_TRAILING - 1e-4)[2]
        assert z == pytest.approx(b3, abs=2e-2)

    def test_rejects_elliptic_window(self, sech2_cp):
        cp = sech2_cp
        with pytest.raises(DomainError):
            connection_algebraic(shifted_point(cp, -5.0, 0.01), cp.tc + 0.01, cp)


class TestSelfSimilar:

    def test_equations_at_zero(self):
        b1, b2, b3 = connection_selfsimilar(0.0)
        assert b1 > b2 > b3
        total = b1 + b2 + b3
        assert abs((total ** 2 + 2 * (b1 ** 2 + b2 ** 2 + b3 ** 2)) / 5 - 6) < 1e-9
        assert abs(2 / 15 * (total ** 3 - 4 * (b1 ** 3 + b2 ** 3 + b3 ** 3))) < 1e-9

    def test_leading_collapse(self):
        b1, b2, b3 = connection_selfsimilar(S_LEADING + 1e-4)
        assert b2 - b3 < 2e-2
        assert_allclose([b1, b2, b3], [2 * math.sqrt(3), -math.sqrt(3) / 2, -math.sqrt(3) / 2], atol=1e-2)

    def test_trailing_collapse(self):
        b1, b2, b3 = connection_selfsimilar(S_TRAILING - 1e-4)
        assert b1 - b2 < 2e-2
        assert_allclose([b1, b3], [math.sqrt(15) / 2, -2 * math.sqrt(15) / 3], atol=2e-2)

    def test_array_matches_scalar(self):
        S = np.array([-5.0, -15.0, 0.5])
        out = connection_selfsimilar(S)
        assert out.shape == (3, 3)
        assert_allclose(out[:, 0], connection_selfsimilar(-5.0), atol=1e-10)

    @pytest.mark.parametrize("S", [S_LEADING, S_TRAILING, 3.0])
    def test_rejects_outside_window(self, S):
        with pytest.raises(DomainError):
            connection_selfsimilar(S)


class TestEllipticConnection:

    def test_value_inside_oscillation_range(self, sech2_cp):
        cp, tau, eps = sech2_cp, 0.01, 1e-2
        x = shifted_point(cp, 0.0, tau)
        value = connection_elliptic(x, cp.tc + tau, eps, cp)
        b1, b2, b3 = (math.sqrt(tau / cp.k) * b for b in connection_selfsimilar(0.0))
        assert math.isfinite(value)
        assert cp.uc + b1 - b2 + b3 - 1e-12 <= value <= cp.uc + b1 + b2 - b3 + 1e-12

    def test_forms_agree(self, sech2_cp):
        cp, tau, eps = sech2_cp, 0.01, 1e-2
        x = np.array([shifted_point(cp, S, tau) for S in (-10.0, -2.0, 1.0)])
        assert_allclose(connection_elliptic(x, cp.tc + tau, eps, cp, "theta"),
                        connection_elliptic(x, cp.tc + tau, eps, cp, "dn"), atol=1e-9)

    def test_rejects_before_breaking(self, sech2_cp):
        with pytest.raises(DomainError):
            connection_elliptic(sech2_cp.xc, sech2_cp.tc - 0.01, 1e-2, sech2_cp)


class TestPIIConnection:

    def test_constants(self):
        assert PII_C0 == pytest.approx(1.8813, abs=1e-4)
        assert PII_C1 == pytest.approx(2.0809, abs=1e-4)

    def test_far_side_is_leading_hopf_value(self, sech2_cp, hm_solution):
        cp, eps = sech2_cp, 1e-3
        tau = 0.01
        T = tau / (cp.k ** (3 / 7) * eps ** (4 / 7))
        X = -12 * math.sqrt(3) * T ** 1.5 - 40 * PII_C0 * PII_C1 * T ** (1 / 3)
        x = cp.xc + 6 * cp.uc * tau + X * cp.k ** (1 / 7) * eps ** (6 / 7)
        value = connection_pii(x, cp.tc + tau, eps, cp, hm_solution)
        assert_allclose(value, cp.uc + 2 * math.sqrt(3) * math.sqrt(tau / cp.k), atol=1e-12)

    def test_rejects_before_breaking(self, sech2_cp, hm_solution):
        with pytest.raises(DomainError):
            connection_pii(sech2_cp.xc, sech2_cp.tc - 0.01, 1e-2, sech2_cp, hm_solution)


class TestSolitonConnection:

    def test_constant(self):
        assert SOLITON_C0 == pytest.approx(math.sqrt(7 / 6) * 15 ** 0.25)

    def test_far_side_is_trailing_hopf_value(self, sech2_cp):
        cp, eps = sech2_cp, 1e-3
        T = 5.0
        tau = T * cp.k ** (3 / 7) * eps ** (4 / 7)
        X = S_TRAILING * T ** 1.5 + 20.0
        x = cp.xc + 6 * cp.uc * tau + X * cp.k ** (1 / 7) * eps ** (6 / 7)
        value = connection_soliton(x, cp.tc + tau, eps, cp)
        assert_allclose(value, cp.uc - 2 * math.sqrt(5 / 3) * math.sqrt(tau / cp.k), atol=1e-12)

    def test_rejects_small_T(self, sech2_cp):
        with pytest.raises(DomainError):
            connection_soliton(sech2_cp.xc, sech2_cp.tc + 1e-6, 1e-2, sech2_cp)


class TestCubicDataCoincidence:
    """For cubic initial data the edge formulas and the connections agree."""

    EPS = 1e-8
    TAUS = (0.02, 0.01, 0.005)

    def test_pii_connection_matches_leading_edge(self, cubic, hm_solution):
        cp = critical_point(cubic)
        diffs = []
        for tau in self.TAUS:
            edge = run_cache.fetch_edges(tau, cubic)[0]
            s = np.linspace(-4.0, 4.0, 161)
            x = edge.x_edge - s * edge.c ** (1 / 3) * math.sqrt(edge.u - edge.v) * self.EPS ** (2 / 3)
            lead = leading_edge_approx(x, tau, self.EPS, edge, hm_solution, cubic, include_order23=False)
            conn = connection_pii(x, tau, self.EPS, cp, hm_solution)
            amplitude = np.max(np.abs(lead - edge.u))
            assert amplitude > 5e-4
            diffs.append(np.max(np.abs(conn - lead)))
            assert diffs[-1] < 1e-4 * amplitude
        assert diffs[1] < diffs[0]
        assert diffs[2] < diffs[1]

    def test_soliton_connection_matches_trailing_edge(self, cubic):
        cp = critical_point(cubic)
        for tau in self.TAUS:
            edge = run_cache.fetch_edges(tau, cubic)[1]
            y = np.linspace(-0.5, 3.5, 4001)
            x = edge.x_edge + y * self.EPS * math.log(self.EPS) / (2.0 * math.sqrt(edge.v - edge.u))
            trail = trailing_edge_approx(x, tau, self.EPS, edge)
            conn = connection_soliton(x, tau, self.EPS, cp)
            assert np.max(trail - edge.u) > edge.v - edge.u
            assert_allclose(conn, trail, rtol=0, atol=1e-6 * (edge.v - edge.u))


class TestConnectionVars:

    def test_window_fills_branches(self, sech2_cp):
        cp, tau = sech2_cp, 0.01
        vars_ = connection_vars(shifted_point(cp, -3.0, tau), cp.tc + tau, 1e-2, cp)
        assert vars_.S == pytest.approx(-3.0)
        assert vars_.b is not None and vars_.z is None
        assert vars_.xi is not None and vars_.omega is not None

    def test_outside_window_fills_root(self, sech2_cp):
        cp, tau = sech2_cp, 0.01
        vars_ = connection_vars(shifted_point(cp, 20.0, tau), cp.tc + tau, 1e-2, cp)
        assert vars_.b is None
        assert abs(vars_.z ** 3 - 6 * vars_.z + 20.0) < 1e-9
