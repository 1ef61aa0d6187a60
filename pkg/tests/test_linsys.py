"""Core linear-system calculus: Lyapunov solves, matrix exponentials,
tau, brackets, and the potential."""

import numpy as np
import pytest
import scipy.linalg as sla

from tausys.errors import SpectrumCollision
from tausys.linsys import (LinearSystem, MatrixJet, bracket, bracket_jet,
                           diagonal_system, jordan_system,
                           log_tau_second_derivative, matrix_exp, one_soliton,
                           potential, random_scattering_system, resolvent_at,
                           scattering, solve_lyapunov, solve_sylvester, tau)
from tausys.linsys import _f_jet
from tausys.reporting import convergence_order

RNG = np.random.default_rng(42)


class TestSolveLyapunov:
    def test_scalar(self):
        R = solve_lyapunov(np.array([[1.0]]), np.array([[2.0]]))
        assert abs(R[0, 0] - 1.0) < 1e-14

    def test_diagonal_entrywise(self):
        A = np.diag([1.0, 2.0])
        M = np.ones((2, 2))
        R = solve_lyapunov(A, M)
        expected = np.array([[0.5, 1 / 3], [1 / 3, 0.25]])
        assert np.abs(R - expected).max() < 1e-14

    def test_random_residual(self):
        A = RNG.normal(size=(6, 6)) + 6 * np.eye(6)  # Re(lam) > 0.5 comfortably
        M = RNG.normal(size=(6, 6))
        R = solve_lyapunov(A, M)
        assert np.linalg.norm(A @ R + R @ A - M) <= 1e-10 * np.linalg.norm(M)

    def test_two_solvers_agree(self):
        A = RNG.normal(size=(5, 5)) + 5 * np.eye(5)
        M = RNG.normal(size=(5, 5))
        R1 = solve_lyapunov(A, M, method="vectorized")
        R2 = solve_lyapunov(A, M, method="eig")
        assert np.abs(R1 - R2).max() < 1e-10

    def test_scipy_oracle(self):
        A = RNG.normal(size=(5, 5)) + 5 * np.eye(5)
        B = RNG.normal(size=(5, 5)) + 5 * np.eye(5)
        M = RNG.normal(size=(5, 5))
        ours = solve_sylvester(A, B, M)
        ref = sla.solve_sylvester(A, B, M)
        assert np.abs(ours - ref).max() < 1e-9

    def test_spectrum_collision(self):
        with pytest.raises(SpectrumCollision):
            solve_lyapunov(np.diag([1.0, -1.0]), np.eye(2))


class TestMatrixExp:
    def test_zero(self):
        E = matrix_exp(np.zeros((3, 3)), 2.0)
        assert np.abs(E - np.eye(3)).max() < 1e-15

    def test_diagonal(self):
        E = matrix_exp(np.diag([1.0, 2.0]), 1.0)
        assert np.abs(E - np.diag([np.exp(-1.0), np.exp(-2.0)])).max() < 1e-14

    def test_jordan_closed_form(self):
        # e^{-x(I+N)} = e^{-x}(I - x N) for the 2x2 block at 1
        A = np.array([[1.0, 1.0], [0.0, 1.0]])
        E = matrix_exp(A, 1.0)
        expected = np.exp(-1.0) * np.array([[1.0, -1.0], [0.0, 1.0]])
        assert np.abs(E - expected).max() < 1e-14

    def test_semigroup(self):
        A = RNG.normal(size=(4, 4))
        E1 = matrix_exp(A, 0.7) @ matrix_exp(A, 0.4)
        E2 = matrix_exp(A, 1.1)
        assert np.abs(E1 - E2).max() < 1e-12

    def test_scipy_oracle_large_norm(self):
        A = 30.0 * RNG.normal(size=(5, 5))
        assert np.abs(matrix_exp(A, 1.0) - sla.expm(-A)).max() \
            < 1e-9 * np.linalg.norm(sla.expm(-A))


class TestResolvent:
    def test_x_zero_is_R0(self):
        sys = random_scattering_system(4, RNG)
        assert np.abs(resolvent_at(sys, 0.0).R - sys.R0).max() < 1e-13

    def test_one_soliton_closed_form(self):
        sys = one_soliton(1.0)
        for x in (0.0, 0.5, 2.0):
            assert abs(resolvent_at(sys, x).R[0, 0] - np.exp(-2 * x) / 2) < 1e-14

    def test_diagonal_entrywise_integral(self):
        lam = np.array([0.6, 1.0, 1.4, 2.0])
        b = np.array([1.0, 0.5, 1.5, 0.8])
        c = np.array([0.7, 1.2, 0.9, 1.1])
        sys = diagonal_system(lam, b, c)
        x = 0.8
        R = resolvent_at(sys, x).R
        L = lam[:, None] + lam[None, :]
        expected = np.multiply.outer(b, c) * np.exp(-L * x) / L
        assert np.abs(R - expected).max() < 1e-13

    def test_lyapunov_identity_grid(self):
        for n in (2, 5, 8, 16):
            sys = random_scattering_system(n, RNG)
            scale = np.linalg.norm(sys.B @ sys.C)
            for x in (0.0, 0.3, 1.0, 2.5):
                assert resolvent_at(sys, x).lyapunov_residual(sys) <= 1e-10 * scale

    def test_resolvent_ode_order(self):
        # (R_{x+h}-R_{x-h})/2h + A R_x + R_x A -> 0 at O(h^2)
        sys = random_scattering_system(4, RNG)
        x = 0.7
        errs, hs = [], (1e-2, 5e-3, 2.5e-3)
        for h in hs:
            dR = (resolvent_at(sys, x + h).R - resolvent_at(sys, x - h).R) / (2 * h)
            R = resolvent_at(sys, x).R
            errs.append(np.linalg.norm(dR + sys.A @ R + R @ sys.A))
        assert convergence_order(hs, errs) > 1.9


class TestTau:
    def test_zero_input(self):
        sys = LinearSystem(np.diag([1.0, 2.0]), np.zeros((2, 1)), np.ones((1, 2)))
        for x in (-1.0, 0.0, 2.0):
            assert abs(tau(sys, x) - 1.0) < 1e-15

    def test_one_soliton_value(self):
        sys = one_soliton(1.0)
        for x in (0.0, 1.0, 3.0):
            assert abs(tau(sys, x) - (1 + np.exp(-2 * x) / 2)) < 1e-14

    def test_three_soliton_subset_expansion(self):
        # brute force over all 2^3 subsets, Cauchy-determinant weights
        from itertools import combinations
        lam = np.array([0.5, 1.1, 1.8])
        b = np.array([1.0, 0.8, 1.2])
        c = np.array([0.9, 1.1, 0.7])
        sys = diagonal_system(lam, b, c)
        x = 0.4
        total = 0.0
        for r in range(4):
            for sigma in combinations(range(3), r):
                # each minor via the Cauchy determinant (the independent oracle)
                if r == 0:
                    total += 1.0
                    continue
                idx = list(sigma)
                M = np.array([[b[j] * c[k] * np.exp(-(lam[j] + lam[k]) * x)
                               / (lam[j] + lam[k]) for k in idx] for j in idx])
                total += np.linalg.det(M)
        assert abs(tau(sys, x) - total) < 1e-12 * abs(total)


class TestScattering:
    def test_zero_input(self):
        sys = LinearSystem(np.diag([1.0, 2.0]), np.zeros((2, 1)), np.ones((1, 2)))
        assert np.abs(scattering(sys, 1.3)).max() == 0.0

    def test_scalar_exponential(self):
        assert abs(scattering(one_soliton(1.0), 0.9)[0, 0] - np.exp(-0.9)) < 1e-14

    def test_blockwise_additivity(self):
        s1 = one_soliton(0.7, 1.1, 0.9)
        s2 = one_soliton(1.3, 0.8, 1.2)
        both = diagonal_system([0.7, 1.3], [1.1, 0.8], [0.9, 1.2])
        x = 0.6
        assert abs(scattering(both, x)[0, 0]
                   - scattering(s1, x)[0, 0] - scattering(s2, x)[0, 0]) < 1e-14


class TestBracket:
    def test_f_inverse_squared_gives_phi2x(self):
        sys = random_scattering_system(4, RNG)
        x = 0.5
        R = resolvent_at(sys, x).R
        P = (np.eye(4) + R) @ (np.eye(4) + R)
        assert abs(bracket(sys, x, P)[0, 0] - scattering(sys, 2 * x)[0, 0]) < 1e-12

    def test_zero_input(self):
        sys = LinearSystem(np.diag([1.0, 2.0]), np.zeros((2, 1)), np.ones((1, 2)))
        assert abs(bracket(sys, 0.7, np.eye(2))[0, 0]) == 0.0

    def test_one_soliton_gives_minus_quarter_u(self):
        # -u/4 with u the sech^2 soliton, via log-derivative closed form
        lam, b, c = 1.0, 1.0, 1.0
        sys = one_soliton(lam, b, c)
        x = 0.8
        x0 = np.log(b * c / (2 * lam)) / (2 * lam)
        u_closed = -2 * lam**2 / np.cosh(lam * (x - x0)) ** 2
        assert abs(bracket(sys, x, sys.A)[0, 0] - (-u_closed / 4)) < 1e-13

    def test_product_rule_exact(self):
        sys = random_scattering_system(4, RNG)
        x = 0.9
        Fj = _f_jet(sys, x, 1)
        Fp = Fj.d[1]  # AF + FA - 2FAF
        for _ in range(3):
            P = RNG.normal(size=(4, 4)) + 1j * RNG.normal(size=(4, 4))
            Q = RNG.normal(size=(4, 4)) + 1j * RNG.normal(size=(4, 4))
            lhs = bracket(sys, x, P)[0, 0] * bracket(sys, x, Q)[0, 0]
            rhs = bracket(sys, x, P @ Fp @ Q)[0, 0]
            assert abs(lhs - rhs) < 1e-12 * max(1.0, abs(lhs))

    def test_f_matrix_derivative_rule_order(self):
        # (F_{x+h} - F_{x-h})/2h - (A F + F A - 2 F A F) -> 0 at O(h^2)
        sys = random_scattering_system(4, RNG)
        x = 0.8

        def F_at(xx):
            return np.linalg.inv(np.eye(4) + resolvent_at(sys, xx).R)

        F = F_at(x)
        rhs = sys.A @ F + F @ sys.A - 2 * F @ sys.A @ F
        hs = (2e-2, 1e-2, 5e-3)
        errs = [np.linalg.norm((F_at(x + h) - F_at(x - h)) / (2 * h) - rhs)
                for h in hs]
        assert convergence_order(hs, errs) > 1.9

    def test_derivative_rule_fd_order(self):
        sys = random_scattering_system(4, RNG)
        x = 0.7
        P = RNG.normal(size=(4, 4))
        F = _f_jet(sys, x, 0).d[0]
        analytic = bracket(sys, x, sys.A @ (np.eye(4) - 2 * F) @ P
                           + P @ (np.eye(4) - 2 * F) @ sys.A)[0, 0]
        hs = (2e-2, 1e-2, 5e-3)
        errs = [abs((bracket(sys, x + h, P)[0, 0]
                     - bracket(sys, x - h, P)[0, 0]) / (2 * h) - analytic)
                for h in hs]
        assert convergence_order(hs, errs) > 1.9

    def test_bracket_jet_matches_fd(self):
        sys = random_scattering_system(3, RNG)
        x = 0.6
        P = RNG.normal(size=(3, 3))
        jets = bracket_jet(sys, x, P, order=2)
        h = 1e-4
        fd1 = (bracket(sys, x + h, P) - bracket(sys, x - h, P)) / (2 * h)
        assert abs(jets[1][0, 0] - fd1[0, 0]) < 1e-7


class TestPotential:
    def test_zero_input(self):
        sys = LinearSystem(np.diag([1.0, 2.0]), np.zeros((2, 1)), np.ones((1, 2)))
        assert abs(potential(sys, 0.5)) == 0.0

    def test_sech_squared_closed_form(self):
        lam, b, c = 0.9, 1.3, 0.7
        sys = one_soliton(lam, b, c)
        x0 = np.log(b * c / (2 * lam)) / (2 * lam)
        for x in (-0.5, 0.4, 1.7):
            u_closed = -2 * lam**2 / np.cosh(lam * (x - x0)) ** 2
            assert abs(potential(sys, x) - u_closed) < 1e-12

    def test_two_soliton_fd_cross_check(self):
        sys = diagonal_system([1.0, 2.0], [1.0, 1.0], [1.0, 1.0])
        for x in (0.2, 0.8, 1.5):
            hs = (1e-2, 5e-3, 2.5e-3, 1.25e-3)
            vals = []
            for h in hs:
                lt = [np.log(tau(sys, x + k * h).real) for k in (-2, -1, 0, 1, 2)]
                d2 = (-lt[0] + 16 * lt[1] - 30 * lt[2] + 16 * lt[3] - lt[4]) / (12 * h**2)
                vals.append(-2 * d2)
            # Richardson-consistent member vs analytic route
            best = vals[-2]
            assert abs(best - potential(sys, x)) < 1e-6

    def test_commutative_identity_diagonal(self):
        # simultaneously diagonal A and BC (m = n); exponent cases m = 0, 1
        lam = np.array([0.6, 1.0, 1.5])
        sys = LinearSystem(np.diag(lam), np.diag([1.0, 0.8, 1.2]),
                           np.diag([0.9, 1.1, 0.7]), scattering=True)
        x = 0.6
        for mm in (0, 1):
            d1 = bracket_jet(sys, x, np.diag(lam ** (2 * mm + 3)), order=1)
            d3 = bracket_jet(sys, x, np.diag(lam ** (2 * mm + 1)), order=3)
            dA = bracket_jet(sys, x, sys.A, order=1)
            val = 4 * d1[1] - d3[3] - 8 * dA[1] @ d3[0] - 16 * d3[0] @ dA[1]
            assert np.abs(val).max() < 1e-8

    def test_log_tau_second_derivative_is_bracket(self):
        sys = random_scattering_system(5, RNG)
        for x in (0.3, 1.1):
            u1 = -2 * log_tau_second_derivative(sys, x)
            u2 = -4 * bracket(sys, x, sys.A)[0, 0]
            assert abs(u1 - u2) < 1e-12 * max(1.0, abs(u1))


class TestSerialization:
    def test_roundtrip(self):
        sys = random_scattering_system(3, RNG, complex_entries=True)
        back = LinearSystem.from_json(sys.to_json())
        assert np.abs(back.A - sys.A).max() < 1e-15
        assert np.abs(back.B - sys.B).max() < 1e-15
        assert np.abs(back.C - sys.C).max() < 1e-15
        assert back.scattering == sys.scattering

    def test_jordan_system_scattering_function(self):
        sys = jordan_system(1.0, 5)
        x = 2.0
        assert abs(scattering(sys, x)[0, 0] - x**4 * np.exp(-x)) < 1e-12


class TestMatrixJet:
    def test_leibniz(self):
        a = MatrixJet([np.array([[1.0]]), np.array([[2.0]]), np.array([[0.5]])])
        b = MatrixJet([np.array([[3.0]]), np.array([[-1.0]]), np.array([[4.0]])])
        c = a @ b
        assert abs(c.d[0][0, 0] - 3.0) < 1e-15
        assert abs(c.d[1][0, 0] - (2 * 3 + 1 * -1)) < 1e-15
        assert abs(c.d[2][0, 0] - (0.5 * 3 + 2 * 2 * -1 + 1 * 4)) < 1e-15
