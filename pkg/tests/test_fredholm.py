"""Quadrature grids, Nystrom Hankel operators, Fredholm determinants,
cross Gramians, and gap probabilities."""

import numpy as np
import pytest
from scipy.integrate import quad

from tausys.errors import NotAContraction, TailTooFat
from tausys.fredholm import (DiscretizedKernel, block_hankel_operator,
                             cross_gram, fredholm_det, gap_probabilities,
                             hankel_operator, hankel_product_det, make_grid,
                             system_symbol, truncation_length)
from tausys.linsys import (diagonal_system, one_soliton,
                           random_scattering_system, resolvent_at, tau)
from tausys.reporting import convergence_order

RNG = np.random.default_rng(7)


class TestGrid:
    def test_two_point_gauss(self):
        g = make_grid(1.0, 2, panel_order=2)
        ref = np.array([0.5 - 0.5 / np.sqrt(3), 0.5 + 0.5 / np.sqrt(3)])
        assert np.abs(np.sort(g.nodes) - ref).max() < 1e-15

    def test_weights_sum_to_T(self):
        for T, m in ((1.0, 16), (7.5, 48), (20.0, 128)):
            g = make_grid(T, m)
            assert abs(g.weights.sum() - T) < 1e-12 * T

    def test_exponential_integral(self):
        T = 30.0
        g = make_grid(T, 64)
        val = g.integrate(np.exp(-g.nodes))
        assert abs(val - (1 - np.exp(-T))) < 1e-12


class TestHankelOperator:
    def test_zero_symbol(self):
        g = make_grid(5.0, 16)
        K = hankel_operator(lambda t: np.zeros_like(np.asarray(t)), 0.0, g,
                            check_tail=False)
        assert np.abs(K.M).max() == 0.0

    def test_rank_one_determinant(self):
        # phi(t) = e^{-t}: kernel e^{-s}e^{-t}, det(I+Gamma) = 1 + int e^{-2t} = 3/2
        g = make_grid(20.0, 64)
        K = hankel_operator(lambda t: np.exp(-np.asarray(t)), 0.0, g)
        assert abs(fredholm_det(K, 1.0) - 1.5) < 1e-10

    def test_three_soliton_matches_tau(self):
        sys = diagonal_system([0.6, 1.1, 1.7], [1.0, 0.8, 1.2], [0.9, 1.1, 0.7])
        phi = system_symbol(sys)
        for x in (0.25, 0.5, 1.0, 2.0):
            T = truncation_length(sys, x)
            K = hankel_operator(phi, x, make_grid(T, 96))
            d = fredholm_det(K, 1.0)
            ref = tau(sys, x)
            assert abs(d - ref) <= 1e-6 * abs(ref)

    def test_symmetry_real_eigenvalues(self):
        sys = diagonal_system([0.7, 1.3], [1.0, 0.9], [1.0, 0.9])
        K = hankel_operator(system_symbol(sys), 0.5,
                            make_grid(truncation_length(sys, 0.5), 64))
        ev = K.eigenvalues()
        assert np.abs(np.imag(ev)).max() < 1e-10

    def test_grid_convergence_order(self):
        sys = diagonal_system([0.6, 1.2], [1.0, 0.9], [0.8, 1.1])
        phi = system_symbol(sys)
        x = 0.5
        T = truncation_length(sys, x)
        ref = tau(sys, x)
        errs, ms = [], (16, 32, 64)
        for m in ms:
            K = hankel_operator(phi, x, make_grid(T, m, panel_order=8),
                                check_tail=False)
            errs.append(abs(fredholm_det(K, 1.0) - ref) / abs(ref))
        # measured in nodes: error ~ m^{-order}; order >= 4 required
        order = -convergence_order(ms, errs)
        assert order >= 4.0

    def test_tail_too_fat(self):
        g = make_grid(2.0, 16)
        with pytest.raises(TailTooFat):
            hankel_operator(lambda t: 1.0 / (1.0 + np.asarray(t)), 0.0, g,
                            tol_tail=1e-9)


class TestFredholmDet:
    def test_mu_zero(self):
        g = make_grid(20.0, 32)
        K = hankel_operator(lambda t: np.exp(-np.asarray(t)), 0.0, g)
        assert abs(fredholm_det(K, 0.0) - 1.0) < 1e-14

    def test_eigenvalue_product_matches_lu(self):
        g = make_grid(15.0, 48)
        K = hankel_operator(lambda t: np.exp(-np.asarray(t)), 0.3, g)
        mu = 0.7 - 0.2j
        lu = fredholm_det(K, mu)
        ev = K.eigenvalues()
        assert abs(lu - np.prod(1 + mu * ev)) < 1e-10


class TestCrossGram:
    def test_same_system_consistency(self):
        sys = random_scattering_system(4, RNG)
        x = 0.6
        assert np.abs(cross_gram(sys, sys, x) - resolvent_at(sys, x).R).max() < 1e-11

    def test_scalar_closed_form(self):
        sa = one_soliton(0.7, 1.2, 0.9)
        sb = one_soliton(1.4, 0.8, 1.1)
        x = 0.5
        val = cross_gram(sa, sb, x)[0, 0]
        # int_x^oo b_a c_b e^{-(la+lb)t} dt with b from sysA, c from sysB
        expected = 1.2 * 1.1 * np.exp(-2.1 * x) / 2.1
        assert abs(val - expected) < 1e-13

    def test_quadrature_oracle(self):
        sa = random_scattering_system(4, RNG)
        sb = random_scattering_system(4, RNG)
        x = 0.4
        R = cross_gram(sa, sb, x)
        for (i, j) in ((0, 0), (1, 3), (2, 2)):
            def integrand(t):
                return np.real((sa.exp(t) @ sa.B @ sb.C @ sb.exp(t))[i, j])
            val, _ = quad(integrand, x, x + 40.0, limit=200)
            assert abs(R[i, j].real - val) < 1e-8


class TestHankelProduct:
    def test_mu_zero(self):
        s1 = one_soliton(1.0)
        s2 = one_soliton(1.3)
        a, b = hankel_product_det(s1, s2, 0.5, 0.0)
        assert abs(a - 1.0) < 1e-12 and abs(b - 1.0) < 1e-12

    def test_one_soliton_closed_form(self):
        # sys1 = sys2 = 1-soliton: det(I - mu^2 R_x^2) = (1-mu R)(1+mu R)
        s = one_soliton(1.0)
        x, mu = 0.6, 0.8
        R = np.exp(-2 * x) / 2
        a, b = hankel_product_det(s, s, x, mu)
        expected = (1 - mu * R) * (1 + mu * R)
        assert abs(a - expected) < 1e-12
        assert abs(b - expected) < 1e-6

    def test_random_pair_agreement(self):
        s1 = random_scattering_system(3, RNG)
        s2 = random_scattering_system(3, RNG)
        for x, mu in ((0.5, 0.6), (1.0, 0.3 + 0.4j)):
            a, b = hankel_product_det(s1, s2, x, mu, m_nodes=128)
            assert abs(a - b) <= 1e-6 * max(1.0, abs(a))


class TestGapProbabilities:
    def _kernel_from_eigs(self, eigs):
        n = len(eigs)
        M = np.diag(np.asarray(eigs, dtype=float))
        g = make_grid(1.0, max(n, 4), panel_order=max(n, 4))
        return DiscretizedKernel(M[:g.m_nodes, :g.m_nodes], g)

    def test_zero_kernel(self):
        g = make_grid(1.0, 8, panel_order=8)
        K = DiscretizedKernel(np.zeros((8, 8)), g)
        E = gap_probabilities(K, 4)
        assert abs(E[0] - 1.0) < 1e-14
        assert max(E[1:]) < 1e-14

    def test_rank_one_bernoulli(self):
        p = 0.37
        K = self._kernel_from_eigs([p, 0.0, 0.0, 0.0])
        E = gap_probabilities(K, 3)
        assert abs(E[0] - (1 - p)) < 1e-14
        assert abs(E[1] - p) < 1e-14
        assert abs(E[2]) < 1e-14

    def test_two_level(self):
        p, q = 0.3, 0.8
        K = self._kernel_from_eigs([p, q, 0.0, 0.0])
        E = gap_probabilities(K, 3)
        assert abs(E[0] - (1 - p) * (1 - q)) < 1e-14
        assert abs(E[1] - (p * (1 - q) + q * (1 - p))) < 1e-14
        assert abs(E[2] - p * q) < 1e-14

    def test_not_contraction(self):
        K = self._kernel_from_eigs([1.2, 0.1, 0.0, 0.0])
        with pytest.raises(NotAContraction):
            gap_probabilities(K, 3)

    def test_airy_normalization(self):
        from tausys.airy import airy_hankel_matrix
        K = airy_hankel_matrix(1.0, 128)
        K2 = DiscretizedKernel(0.25 * (K.M @ K.M), K.grid, symbol="airy^2/4", x=1.0)
        E = gap_probabilities(K2, 20)
        assert all(e >= -1e-15 for e in E)
        assert abs(sum(E) - 1.0) <= 1e-8

    def test_monotone_in_interval(self):
        # shrinking J (here: moving x up) increases E(0)
        from tausys.airy import airy_hankel_matrix
        vals = []
        for x in (0.0, 0.5, 1.0):
            K = airy_hankel_matrix(x, 96)
            K2 = DiscretizedKernel(0.25 * (K.M @ K.M), K.grid)
            vals.append(gap_probabilities(K2, 5)[0])
        assert vals[0] < vals[1] < vals[2]


class TestMuDisk:
    def test_identity_on_mu_disk(self):
        # det(I + mu R_x) vs the Nystrom eigenvalue product for |mu| <= 2
        # (the validated analytic-continuation disk; larger mu unvalidated)
        sys = diagonal_system([0.6, 1.1, 1.7], [1.0, 0.8, 1.2], [0.9, 1.1, 0.7])
        x = 0.5
        K = hankel_operator(system_symbol(sys), x,
                            make_grid(truncation_length(sys, x), 96))
        ev = K.eigenvalues()
        for mu in (2.0, -2.0, 2j, 1.2 + 1.2j, 0.5):
            ref = tau(sys, x, mu)
            val = np.prod(1.0 + mu * ev)
            assert abs(val - ref) <= 1e-6 * max(1.0, abs(ref))


class TestSweepCSV:
    def test_header_and_shape(self):
        from tausys.fredholm import determinant_sweep_csv
        sys = diagonal_system([0.7, 1.2], [1.0, 0.9], [0.8, 1.1])

        def K_of(x):
            return hankel_operator(system_symbol(sys), x,
                                   make_grid(truncation_length(sys, x), 48))

        text = determinant_sweep_csv(K_of, [0.5, 1.0], [1.0, 1j])
        lines = text.strip().splitlines()
        assert lines[0] == "x,mu_re,mu_im,det_re,det_im"
        assert len(lines) == 1 + 4
        first = [float(v) for v in lines[1].split(",")]
        assert abs(first[3] - tau(sys, 0.5).real) < 1e-7


class TestBlockHankel:
    def test_block_structure(self):
        s1 = one_soliton(0.8)
        s2 = one_soliton(1.1)
        g = make_grid(20.0, 32)
        K = block_hankel_operator(system_symbol(s1), system_symbol(s2), 0.3, g)
        m = 32
        assert np.abs(K.M[:m, :m]).max() == 0.0
        assert np.abs(K.M[m:, m:]).max() == 0.0
