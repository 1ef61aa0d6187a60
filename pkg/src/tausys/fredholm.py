"""Nystrom discretization of Hankel integral operators on the half-line.

The Hankel operator with symbol phi and shift x acts on L^2(0, oo) with
kernel phi(s + t + 2x).  Composite Gauss-Legendre quadrature on (0, T)
turns it into the symmetrized matrix M_ij = sqrt(w_i) phi(t_i+t_j+2x)
sqrt(w_j), whose determinant approximates the Fredholm determinant.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import NotAContraction, SpectrumCollision, TailTooFat
from .linsys import LinearSystem, matrix_exp, resolvent_at, solve_sylvester

__all__ = [
    "HalfLineGrid",
    "DiscretizedKernel",
    "make_grid",
    "hankel_operator",
    "block_hankel_operator",
    "fredholm_det",
    "cross_gram",
    "hankel_product_det",
    "gap_probabilities",
    "system_symbol",
    "truncation_length",
]

PANEL_ORDER = 16


@dataclass(frozen=True)
class HalfLineGrid:
    """Composite Gauss-Legendre nodes/weights on (0, T)."""

    nodes: np.ndarray
    weights: np.ndarray
    T: float

    def __post_init__(self):
        object.__setattr__(self, "nodes", np.asarray(self.nodes, dtype=float))
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))

    @property
    def m_nodes(self) -> int:
        return self.nodes.size

    def integrate(self, values: np.ndarray) -> complex:
        return np.tensordot(self.weights, np.asarray(values), axes=(0, 0))


def make_grid(T: float, m_nodes: int, panel_order: int = PANEL_ORDER) -> HalfLineGrid:
    """Composite Gauss-Legendre grid on (0, T).

    m_nodes is rounded up to a whole number of panels of `panel_order`
    points each; panels all have equal width.
    """
    if T <= 0:
        raise ValueError("T must be positive")
    if m_nodes < 2:
        raise ValueError("need at least 2 nodes")
    order = min(panel_order, m_nodes)
    n_panels = max(1, -(-m_nodes // order))
    xg, wg = np.polynomial.legendre.leggauss(order)
    width = T / n_panels
    nodes, weights = [], []
    for p in range(n_panels):
        a = p * width
        nodes.append(a + (xg + 1.0) * width / 2.0)
        weights.append(wg * width / 2.0)
    return HalfLineGrid(np.concatenate(nodes), np.concatenate(weights), T)


@dataclass(frozen=True)
class DiscretizedKernel:
    """Symmetrized Nystrom matrix of an integral operator, with provenance."""

    M: np.ndarray
    grid: HalfLineGrid
    symbol: str = ""
    x: float = 0.0
    meta: dict = field(default_factory=dict)

    def eigenvalues(self) -> np.ndarray:
        M = self.M
        if np.allclose(M, M.conj().T, atol=1e-13 * max(1.0, np.abs(M).max())):
            return np.linalg.eigvalsh(M.real if np.isrealobj(M) else M)
        return np.linalg.eigvals(M)

    def to_csv(self) -> str:
        g = self.grid
        lines = ["s,t,k"]
        sw = np.sqrt(g.weights)
        for i, s in enumerate(g.nodes):
            for j, t in enumerate(g.nodes):
                k = self.M[i, j] / (sw[i] * sw[j])
                lines.append(f"{s:.9e},{t:.9e},{np.real(k):.12e}")
        return "\n".join(lines) + "\n"


def truncation_length(sys: LinearSystem, x: float, decay: float = 12.0) -> float:
    """Grid length T = x + decay / min Re(lam) for a system symbol."""
    lam_min = float(np.min(sys.eigenvalues.real))
    if lam_min <= 0:
        raise TailTooFat("symbol does not decay: min Re(lam) <= 0")
    return max(x, 0.0) + decay / lam_min


def system_symbol(sys: LinearSystem):
    """Vectorized scalar scattering function xi -> C e^{-xi A} B (m = 1).

    Uses the eigendecomposition when A is diagonalizable with a
    well-conditioned eigenvector basis, otherwise per-point matrix
    exponentials (covers Jordan blocks).
    """
    if sys.m != 1:
        raise ValueError("system_symbol needs a scalar-output system")
    try:
        w, V = np.linalg.eig(sys.A)
        if np.linalg.cond(V) < 1e8:
            alpha = (sys.C @ V).ravel() * np.linalg.solve(V, sys.B).ravel()

            def phi(xi):
                xi = np.asarray(xi, dtype=float)
                return np.tensordot(alpha, np.exp(-np.multiply.outer(w, xi)), axes=(0, 0))

            return phi
    except np.linalg.LinAlgError:
        pass

    def phi_slow(xi):
        xi_arr = np.atleast_1d(np.asarray(xi, dtype=float))
        vals = np.array([(sys.C @ matrix_exp(sys.A, t) @ sys.B)[0, 0] for t in xi_arr])
        return vals.reshape(np.shape(xi))

    return phi_slow


def _tail_check(phi, x, T, tol_tail):
    edge = np.abs(np.asarray(phi(np.array([2 * T + 2 * x])))).max()
    scale = np.abs(np.asarray(phi(np.array([2 * x + 1e-3, x + T])))).max()
    if edge > tol_tail * max(scale, 1e-30) and edge > tol_tail:
        raise TailTooFat(
            f"|phi(2T+2x)| = {edge:.3e} exceeds tail tolerance {tol_tail:.1e}; increase T")


def hankel_operator(phi, x: float, grid: HalfLineGrid,
                    tol_tail: float = 1e-9, check_tail: bool = True) -> DiscretizedKernel:
    """Symmetrized Nystrom matrix of the Hankel operator, kernel phi(s+t+2x)."""
    t = grid.nodes
    _ = _tail_check(phi, x, grid.T, tol_tail) if check_tail else None
    K = np.asarray(phi(t[:, None] + t[None, :] + 2 * x))
    sw = np.sqrt(grid.weights)
    return DiscretizedKernel(sw[:, None] * K * sw[None, :], grid, symbol="phi", x=x)


def block_hankel_operator(phi1, phi2, x: float, grid: HalfLineGrid,
                          tol_tail: float = 1e-9) -> DiscretizedKernel:
    """Nystrom matrix of the 2x2 block Hankel operator with symbol
    Phi = [[0, phi2], [phi1, 0]] (the pairing used by the product formula)."""
    K1 = hankel_operator(phi1, x, grid, tol_tail).M
    K2 = hankel_operator(phi2, x, grid, tol_tail).M
    Z = np.zeros_like(K1)
    M = np.block([[Z, K2], [K1, Z]])
    big = HalfLineGrid(np.concatenate([grid.nodes, grid.nodes]),
                       np.concatenate([grid.weights, grid.weights]), grid.T)
    return DiscretizedKernel(M, big, symbol="block", x=x)


def fredholm_det(K: DiscretizedKernel, mu: complex = 1.0) -> complex:
    """det(I + mu M) via pivoted LU."""
    n = K.M.shape[0]
    lu, piv = sla.lu_factor(np.eye(n) + mu * K.M)
    det = complex(np.prod(np.diag(lu)))
    swaps = np.sum(piv != np.arange(n))
    return det * (-1.0) ** swaps


def cross_gram(sysA: LinearSystem, sysB: LinearSystem, x: float) -> np.ndarray:
    """R_AB(x) = int_x^oo e^{-tA_a} B_a C_b e^{-tA_b} dt by a Sylvester solve.

    Solves A_a R + R A_b = e^{-xA_a} B_a C_b e^{-xA_b}; no quadrature.
    """
    Ea = sysA.exp(x)
    Eb = sysB.exp(x)
    M = Ea @ sysA.B @ sysB.C @ Eb
    return solve_sylvester(sysA.A, sysB.A, M)


def hankel_product_det(sys1: LinearSystem, sys2: LinearSystem, x: float,
                       mu: complex, m_nodes: int = 96, decay: float = 12.0):
    """The two sides of the Hankel-product determinant identity.

    Returns (det(I - mu^2 R_12 R_21) from the state-space route,
    Nystrom det of the block Hankel operator with symbol [[0, phi2], [phi1, 0]]).
    """
    if not (sys1.scattering and sys2.scattering):
        raise ValueError("both systems must be scattering-class")
    R12 = cross_gram(sys1, sys2, x)
    R21 = cross_gram(sys2, sys1, x)
    n = R12.shape[0]
    det_state = complex(np.linalg.det(np.eye(n) - mu**2 * R12 @ R21))

    T = max(truncation_length(sys1, x, decay), truncation_length(sys2, x, decay))
    grid = make_grid(T, m_nodes)
    K = block_hankel_operator(system_symbol(sys1), system_symbol(sys2), x, grid)
    det_nystrom = fredholm_det(K, mu)
    return det_state, det_nystrom


def determinant_sweep_csv(K_of_x, x_values, mu_values) -> str:
    """CSV body 'x,mu_re,mu_im,det_re,det_im' over a (x, mu) sweep.

    K_of_x maps an abscissa to a DiscretizedKernel; determinants come from
    the eigenvalue product so a single discretization serves every mu.
    """
    lines = ["x,mu_re,mu_im,det_re,det_im"]
    for x in x_values:
        ev = K_of_x(x).eigenvalues()
        for mu in mu_values:
            det = complex(np.prod(1.0 + mu * ev))
            lines.append(f"{x:.12e},{np.real(mu):.12e},{np.imag(mu):.12e},"
                         f"{det.real:.12e},{det.imag:.12e}")
    return "\n".join(lines) + "\n"


def gap_probabilities(K: DiscretizedKernel, n_max: int, slack: float = 1e-8) -> list[float]:
    """Counting probabilities E(n) of the determinantal process of kernel K.

    With eigenvalues p_i of the (contraction) kernel,
        det(I - z K) = prod(1 - z p_i),
    and E(n) = (-1)^n/n! d^n/dz^n |_{z=1} of that product, evaluated here
    through elementary symmetric polynomials of p_i / (1 - p_i):
        E(n) = prod(1 - p_i) * e_n(p/(1-p)).
    """
    p = K.eigenvalues()
    if np.abs(p.imag).max(initial=0.0) > 1e-8:
        raise NotAContraction("kernel eigenvalues are not real")
    p = np.real(p)
    if p.min(initial=0.0) < -slack or p.max(initial=0.0) > 1.0 + slack:
        raise NotAContraction(
            f"eigenvalues outside [0,1]: min={p.min():.3e}, max={p.max():.3e}")
    p = np.clip(p, 0.0, 1.0 - 1e-300)
    e0 = float(np.prod(1.0 - p))
    a = p / (1.0 - p)
    # recursive expansion of prod(1 + a_i z): coefficients are e_n(a)
    coeffs = np.zeros(n_max + 1)
    coeffs[0] = 1.0
    for ai in a:
        upd = coeffs[:-1].copy()
        coeffs[1:] += ai * upd
    return [e0 * c for c in coeffs]
