"""theta_1 realization by periodic block systems, Weierstrass functions,
Lame eigenfunctions, periodic Gelfand-Levitan, pole dynamics."""

import math

import numpy as np
import pytest

from tausys.elliptic import (EllipticParams, build_theta_system, lame_psi2,
                             lame_eigen_residual, period_integral_identity_residual,
                             periodic_gl_residual, periodic_potential,
                             pole_dynamics, scattering_periodic, tau_periodic,
                             theta1, theta1_series_form, theta_product,
                             weierstrass_p, weierstrass_p_prime,
                             weierstrass_zeta)
from tausys.errors import (CollisionDetected, ConstraintViolated,
                           HypothesisFailed, LatticePoint)
from tausys.reporting import fd_derivative

Q = 0.3
PARAMS = EllipticParams.from_nome(Q)


class TestTheta1:
    def test_odd_zero_at_origin(self):
        assert abs(theta1(0.0, Q)) < 1e-15
        assert abs(theta1(0.4, Q) + theta1(-0.4, Q)) < 1e-15

    def test_series_vs_product(self):
        # theta_1(x) = -i q^{1/4} prod(1-q^{2n}) * [2i sin x prod(1 - 2q^{2n}cos2x + q^{4n})]
        prodq = np.prod([1 - Q ** (2 * n) for n in range(1, 200)])
        for x in (0.3, 0.7, 1.9):
            lhs = theta1(x, Q)
            rhs = -1j * Q**0.25 * prodq * theta_product(Q, x)
            assert abs(lhs - rhs) <= 1e-12

    def test_bilateral_series_mapping(self):
        # the exponential bilateral series evaluates to -theta1(pi x):
        # argument scaling x -> pi x plus a -1 prefactor (derived numerically)
        for x in (0.11, 0.37):
            assert abs(theta1_series_form(x, Q) + theta1(math.pi * x, Q)) < 1e-12

    def test_quasi_periodicity(self):
        # theta1(x + pi) = -theta1(x); theta1(x - i log q) = -(1/q) e^{-2ix} theta1(x)
        x = 0.52
        assert abs(theta1(x + math.pi, Q) + theta1(x, Q)) < 1e-13
        shift = -1j * math.log(Q)
        lhs = theta1(x + shift, Q)
        rhs = -(1.0 / Q) * np.exp(-2j * x) * theta1(x, Q)
        assert abs(lhs - rhs) <= 1e-12 * abs(rhs)


class TestWeierstrass:
    def test_branch_values_sum_zero(self):
        e1, e2, e3 = PARAMS.branch_points
        assert e3 < e2 < e1
        assert abs(e1 + e2 + e3) < 1e-9

    def test_cubic_identity(self):
        for z in (0.4, 0.9 + 0.3j, 1.4, 0.2 + 0.5j):
            assert PARAMS.cubic_residual(z) <= 1e-8

    def test_even(self):
        for z in (0.37, 0.6 + 0.2j):
            assert abs(weierstrass_p(z, PARAMS) - weierstrass_p(-z, PARAMS)) < 1e-11

    def test_laurent_leading(self):
        for eps in (1e-2, 1e-3):
            val = eps**2 * weierstrass_p(eps, PARAMS)
            assert abs(val - 1.0) < 10 * eps**2

    def test_half_period_values(self):
        e1, e2, e3 = PARAMS.branch_points
        assert abs(weierstrass_p(PARAMS.omega1, PARAMS) - e1) < 1e-9
        assert abs(weierstrass_p(PARAMS.omega1 + PARAMS.omega2, PARAMS) - e2) < 1e-9
        assert abs(weierstrass_p(PARAMS.omega2, PARAMS) - e3) < 1e-9

    def test_wp_prime_odd_and_fd(self):
        z = 0.8
        assert abs(weierstrass_p_prime(z, PARAMS)
                   + weierstrass_p_prime(-z, PARAMS)) < 1e-10
        fd = fd_derivative(lambda s: weierstrass_p(s, PARAMS), z, 1, 1e-3)
        assert abs(fd - weierstrass_p_prime(z, PARAMS)) < 1e-8

    def test_zeta_laurent(self):
        for eps in (1e-2, 1e-3):
            assert abs(eps * weierstrass_zeta(eps, PARAMS) - 1.0) < 10 * eps**2

    def test_lattice_point_guard(self):
        with pytest.raises(LatticePoint):
            weierstrass_p(0.0, PARAMS)
        with pytest.raises(LatticePoint):
            weierstrass_p(math.pi, PARAMS)

    def test_scaled_lattice_homogeneity(self):
        wide = EllipticParams(2 * math.pi, 2.4j * math.pi)
        s = wide.scale
        # wp(z | wide) = s^2 wp_model(s z) with the same nome
        small = EllipticParams.from_nome(wide.q)
        z = 2.3 + 1.1j
        assert abs(weierstrass_p(z, wide) - s**2 * weierstrass_p(s * z, small)) < 1e-10

    def test_high_density_limit_cosec_row(self):
        # omega_2 / i -> oo (q -> 0): wp -> (pi/2w1)^2 (cosec^2(pi x/2w1) - 1/3)
        w1 = math.pi / 2.0
        params = EllipticParams(w1, 20.0j)
        s = math.pi / (2 * w1)
        for x in (0.6, 1.1):
            ref = s**2 * (1.0 / math.sin(s * x) ** 2 - 1.0 / 3.0)
            assert abs(weierstrass_p(x, params) - ref) <= 1e-10

    def test_thermodynamic_limit_cosech_row(self):
        # omega_1 -> oo with imaginary half-period i*w fixed:
        # wp -> (pi/2w)^2 (cosech^2(pi x/2w) + 1/3), evaluated through the
        # rotated lattice wp(x | L) = -wp(ix | iL)
        w = 1.0
        rotated = EllipticParams(w, 25.0j)  # iL of (omega1 = 25, omega2 = i w)
        s = math.pi / (2 * w)
        for x in (0.5, 1.2):
            val = -weierstrass_p(1j * x, rotated)
            ref = s**2 * (1.0 / math.sinh(s * x) ** 2 + 1.0 / 3.0)
            assert abs(val - ref) <= 1e-10


class TestThetaSystem:
    def test_defining_relation_exact(self):
        for q in (0.1, 0.3, 0.5):
            sys = build_theta_system(q, N=12)
            assert sys.defect() == 0.0

    def test_block_entries(self):
        sys = build_theta_system(0.3, N=2)
        assert np.abs(sys.E[:2, :2] - 1j * np.array([[0, -1], [1, 0]])).max() == 0.0
        assert abs(sys.E[2, 2] + 0.3**2) < 1e-15
        assert abs(sys.B[2, 2] + 2 * 0.3**2) < 1e-15
        assert abs(sys.E[4, 4] + 0.3**4) < 1e-15

    def test_group_periodicity(self):
        # blocks rotate with speeds 1/2 and 1: e^{-4 pi A} = I exactly
        sys = build_theta_system(0.3, N=4)
        assert np.abs(sys.exp(4 * math.pi) - np.eye(sys.dim)).max() < 1e-12
        # the half-speed top block flips sign under 2 pi
        E2 = sys.exp(2 * math.pi)
        assert np.abs(E2[:2, :2] + np.eye(2)).max() < 1e-13
        assert np.abs(E2[2:, 2:] - np.eye(sys.dim - 2)).max() < 1e-12

    def test_default_truncation_rule(self):
        sys = build_theta_system(0.3)
        assert sys.N == math.ceil(math.log(1e-14) / (2 * math.log(0.3)))
        assert sys.tail_bound() <= 0.3 ** (2 * (sys.N + 1)) / (1 - 0.09) + 1e-30

    def test_tau_vanishes_at_origin(self):
        sys = build_theta_system(0.3, N=20)
        assert abs(tau_periodic(sys, 0.0)) < 1e-13

    def test_half_system_product_formula(self):
        for q in (0.1, 0.3, 0.5):
            sys = build_theta_system(q, N=40)
            for x in (0.37, 1.1, 2.0):
                det = tau_periodic(sys, x, full=False)
                ref = theta_product(q, x, N=None)
                assert abs(det - ref) <= 1e-10 * max(1.0, abs(ref))

    def test_full_system_theta_product(self):
        q = 0.3
        sys = build_theta_system(q, N=40)
        prodq = np.prod([1 - q ** (2 * n) for n in range(1, 400)])
        for x in (0.37, 1.1):
            det = tau_periodic(sys, x, full=True)
            ref = theta1(x, q) ** 2 / (np.sqrt(q) * prodq**2)
            assert abs(det - ref) <= 1e-10 * abs(ref)

    def test_tau_pi_periodic(self):
        sys = build_theta_system(0.25, N=30)
        for x in (0.4, 1.3):
            assert abs(tau_periodic(sys, x + math.pi) - tau_periodic(sys, x)) < 1e-12

    def test_zero_set_at_lattice(self):
        # Newton from a nearby start lands on pi and on i|log q|
        q = 0.4
        sys = build_theta_system(q, N=40)
        for target in (math.pi + 0j, -1j * math.log(q)):
            z = complex(target) + 0.04 + 0.02j
            for _ in range(60):
                f = tau_periodic(sys, z, full=False)
                df = (tau_periodic(sys, z + 1e-6, full=False)
                      - tau_periodic(sys, z - 1e-6, full=False)) / 2e-6
                step = f / df
                z -= step
                if abs(step) < 1e-13:
                    break
            assert abs(z - target) <= 1e-8


class TestPeriodicScattering:
    def test_full_trace_odd_at_zero(self):
        sys = build_theta_system(0.3, N=20)
        assert abs(scattering_periodic(sys, 0.0)) < 1e-13

    def test_matches_closed_form(self):
        q, N = 0.2, 30
        sys = build_theta_system(q, N=N)
        x = 1.0
        val = scattering_periodic(sys, x)
        ref = -8 * q**2 * np.sin(x) / (1 - q**2)
        # truncated geometric tail: sum_{n>N} 8 q^{2n} |sin x|
        assert abs(val - ref) <= 8 * q ** (2 * (N + 1)) / (1 - q**2) + 1e-14

    def test_truncation_difference_bound(self):
        q = 0.3
        s5 = build_theta_system(q, N=5)
        s40 = build_theta_system(q, N=40)
        x = 0.8
        diff = abs(scattering_periodic(s5, x) - scattering_periodic(s40, x))
        assert diff <= 8 * q**12 / (1 - q**2)


class TestPeriodicPotential:
    def test_periodicity(self):
        sys = build_theta_system(0.3, N=30)
        for x in (0.6, 1.2):
            assert abs(periodic_potential(sys, x + math.pi)
                       - periodic_potential(sys, x)) < 1e-10

    def test_trace_vs_wp_route(self):
        sys = build_theta_system(0.3, N=40)
        for x in (0.5, 1.1, 2.2):
            a = periodic_potential(sys, x, route="trace")
            b = periodic_potential(sys, x, route="wp")
            assert abs(a - b) <= 1e-7

    def test_trace_vs_fd_of_log_tau(self):
        sys = build_theta_system(0.3, N=40)
        x, h = 0.9, 1e-3
        lt = [np.log(np.real(tau_periodic(sys, x + k * h))) for k in (-2, -1, 0, 1, 2)]
        d2 = (-lt[0] + 16 * lt[1] - 30 * lt[2] + 16 * lt[3] - lt[4]) / (12 * h**2)
        assert abs(periodic_potential(sys, x) - (-2 * d2)) < 1e-7

    def test_small_q_limit(self):
        # u -> 4 / sin^2 x as q -> 0 at rate O(q^2)
        gaps = []
        for q in (1e-2, 1e-3):
            sys = build_theta_system(q, N=3)
            gaps.append(max(abs(periodic_potential(sys, x) - 4.0 / np.sin(x) ** 2)
                            for x in (0.7, 1.3)))
        assert gaps[0] <= 5e-3
        assert gaps[1] <= 5e-5
        assert gaps[0] / gaps[1] > 50.0  # ~q^2 rate


class TestPeriodicGL:
    def test_integral_identity(self):
        # int_x^{x+pi/2} e^{-zA} BC e^{-zA} dz = 2 e^{-xA} E e^{-xA} holds
        # exactly for rotation blocks; the half-speed theta block breaks it
        # (same obstruction as the anti-symmetry hypothesis)
        rot = build_theta_system(0.25, N=10, exceptional_block=False)
        for x in (0.0, 0.4):
            assert period_integral_identity_residual(rot, x) <= 1e-10
        full = build_theta_system(0.25, N=10, exceptional_block=True)
        assert period_integral_identity_residual(full, 0.0) > 0.5

    def test_antisymmetry_split(self):
        full = build_theta_system(0.25, N=8, exceptional_block=True)
        rot = build_theta_system(0.25, N=8, exceptional_block=False)
        assert full.antisymmetry_defect() > 0.5
        assert rot.antisymmetry_defect() < 1e-14

    def test_hypothesis_failed_on_theta_system(self):
        sys = build_theta_system(0.25, N=8, exceptional_block=True)
        with pytest.raises(HypothesisFailed):
            periodic_gl_residual(sys, 0.4, 0.9)

    def test_residual_rotation_system(self):
        sys = build_theta_system(0.25, N=12, exceptional_block=False)
        for (x, y) in ((0.4, 0.9), (0.1, 0.3), (1.0, 1.7)):
            assert periodic_gl_residual(sys, x, y) <= 1e-7

    def test_degenerate_zero_E(self):
        import dataclasses
        sys = build_theta_system(0.25, N=4, exceptional_block=False)
        zero = dataclasses.replace(sys, E=np.zeros_like(sys.E),
                                   B=np.zeros_like(sys.B))
        # with E = 0, B = 0: T = -Phi = 0 and the equation is 0 = 0
        assert periodic_gl_residual(zero, 0.4, 0.9) < 1e-14


class TestLame:
    ALPHA = 0.3 + 0.2j

    def test_product_identity(self):
        for x in (0.7, 1.1):
            val = lame_psi2(x, self.ALPHA, PARAMS) * lame_psi2(-x, self.ALPHA, PARAMS)
            ref = weierstrass_p(self.ALPHA, PARAMS) - weierstrass_p(x, PARAMS)
            assert abs(val - ref) <= 1e-8

    def test_eigen_residual(self):
        rep = lame_eigen_residual(self.ALPHA, PARAMS, np.linspace(0.2, 1.4, 9))
        assert rep.max <= 1e-6
        assert rep.meta["product_identity_max"] <= 1e-8
        assert rep.meta["addition_rule_max"] <= 1e-6

    def test_trig_degeneration_table_row(self):
        # g = 1 trigonometric row: psi = 2 cot x, gamma = -2 cosec^2 x satisfy
        # the addition rule psi(x+y) = (psi'x psi y - psi x psi'y)/(gx - gy)
        psi = lambda s: 2.0 / np.tan(s)
        dpsi = lambda s: -2.0 / np.sin(s) ** 2
        g = lambda s: -2.0 / np.sin(s) ** 2
        x, y = 0.5, 0.8
        rhs = (dpsi(x) * psi(y) - psi(x) * dpsi(y)) / (g(x) - g(y))
        assert abs(psi(x + y) - rhs) < 1e-12

    def test_small_q_reduces_to_trig(self):
        # theta-quotient eigenfunction tends to the sin-ratio form as q -> 0
        q = 1e-4
        params = EllipticParams.from_nome(q)
        alpha, x = 0.6, 0.9
        val = lame_psi2(x, alpha, params)
        cot = np.cos(alpha) / np.sin(alpha)
        ref = -np.exp(x * cot) * np.sin(x - alpha) / (np.sin(alpha) * np.sin(x))
        assert abs(val - ref) <= 1e-3 * abs(ref)


class TestPoleDynamics:
    WIDE = EllipticParams(2 * math.pi, 2.4j * math.pi)

    def test_single_pole_stationary(self):
        traj, rep = pole_dynamics([1.0 + 0.0j], self.WIDE, t_max=0.01, dt=2e-3)
        assert np.abs(traj[:, 0] - traj[0, 0]).max() < 1e-15
        assert rep.max == 0.0

    def test_symmetric_three_constraint(self):
        w1 = self.WIDE.omega1
        poles = [0.11, 0.11 + 2 * w1 / 3, 0.11 + 4 * w1 / 3]
        traj, rep = pole_dynamics(poles, self.WIDE, t_max=0.01, dt=5e-4)
        assert rep.max <= 1e-6               # constraint drift
        assert rep.meta["kdv_residual"] <= 1e-4

    def test_rigid_translation_oracle(self):
        # equally spaced poles translate rigidly at v = 12 wp(2 omega1 / 3)
        w1 = self.WIDE.omega1
        poles = [0.11, 0.11 + 2 * w1 / 3, 0.11 + 4 * w1 / 3]
        v = 12.0 * weierstrass_p(2 * w1 / 3, self.WIDE)
        traj, rep = pole_dynamics(poles, self.WIDE, t_max=0.01, dt=5e-4)
        ref = np.asarray(poles)[None, :] + v * np.asarray(rep.grid)[:, None]
        assert np.abs(traj - ref).max() <= 1e-9

    def test_constraint_violated(self):
        with pytest.raises(ConstraintViolated):
            pole_dynamics([0.2, 0.9], self.WIDE, t_max=0.01, dt=1e-3)

    def test_collision_detected(self):
        w1 = self.WIDE.omega1
        poles = [0.11, 0.11 + 2 * w1 / 3, 0.11 + 4 * w1 / 3]
        with pytest.raises(CollisionDetected):
            pole_dynamics(poles, self.WIDE, t_max=0.01, dt=1e-3,
                          collision_tol=2 * w1 / 3 + 0.01)
