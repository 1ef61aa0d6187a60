"""Finite-dimensional linear systems (-A, B, C) and their state-space calculus.

A linear system here is a triple of complex matrices: A (n x n, minus the
semigroup generator), B (n x m), C (m x n).  Everything else in the package
is generated from it: the scattering function phi(x) = C e^{-xA} B, the
state operator R_x solving the Lyapunov equation, the tau function
det(I + R_x), the potential u = -2 (log tau)'', and the bracket calculus
<P> = C e^{-xA} F_x P F_x e^{-xA} B with F_x = (I + R_x)^{-1}.

Sign convention: the Lyapunov initial condition is A R_0 + R_0 A = B C.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg as sla

from .errors import SingularResolvent, SpectrumCollision

__all__ = [
    "LinearSystem",
    "StateOperator",
    "BracketOperand",
    "matrix_exp",
    "solve_lyapunov",
    "solve_sylvester",
    "resolvent_at",
    "tau",
    "log_tau_derivative",
    "log_tau_second_derivative",
    "scattering",
    "bracket",
    "bracket_jet",
    "potential",
    "MatrixJet",
    "random_scattering_system",
    "one_soliton",
    "diagonal_system",
    "jordan_system",
]

#: relative spectrum-collision threshold (eps_spec = 1e-8 * ||A||)
EPS_SPEC = 1e-8
#: condition-number cap beyond which I + mu R_x counts as singular
COND_CAP = 1e12


# ---------------------------------------------------------------------------
# matrix exponential: scaling and squaring with the order-13 diagonal Pade
# approximant.  Works for defective (Jordan-block) matrices, which the
# eigendecomposition route would not.
# ---------------------------------------------------------------------------

_PADE13 = np.array(
    [
        64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
        1187353796428800.0, 129060195264000.0, 10559470521600.0,
        670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
        960960.0, 16380.0, 182.0, 1.0,
    ]
)


def _expm_pade13(M: np.ndarray) -> np.ndarray:
    b = _PADE13
    n = M.shape[0]
    ident = np.eye(n, dtype=M.dtype)
    M2 = M @ M
    M4 = M2 @ M2
    M6 = M4 @ M2
    U = M @ (M6 @ (b[13] * M6 + b[11] * M4 + b[9] * M2)
             + b[7] * M6 + b[5] * M4 + b[3] * M2 + b[1] * ident)
    V = (M6 @ (b[12] * M6 + b[10] * M4 + b[8] * M2)
         + b[6] * M6 + b[4] * M4 + b[2] * M2 + b[0] * ident)
    return np.linalg.solve(V - U, V + U)


def matrix_exp(A: np.ndarray, x: float | complex = 1.0) -> np.ndarray:
    """e^{-xA} by scaling and squaring (Pade order 13).

    The sign convention matches the semigroup of the linear system: the
    returned matrix is exp(-x*A).
    """
    A = np.asarray(A)
    M = -x * A.astype(complex, copy=False)
    nrm = np.linalg.norm(M, 1)
    # 5.37 is the order-13 Pade accuracy radius
    s = max(0, int(math.ceil(math.log2(nrm / 5.37))) if nrm > 5.37 else 0)
    E = _expm_pade13(M / 2**s)
    for _ in range(s):
        E = E @ E
    return E


# ---------------------------------------------------------------------------
# Lyapunov / Sylvester solves
# ---------------------------------------------------------------------------

def _check_spectra(lam_left, lam_right, scale):
    thresh = EPS_SPEC * max(scale, 1e-300)
    sums = lam_left[:, None] + lam_right[None, :]
    k = np.argmin(np.abs(sums))
    i, j = np.unravel_index(k, sums.shape)
    if abs(sums[i, j]) < thresh:
        raise SpectrumCollision(lam_left[i], lam_right[j], thresh)


def solve_sylvester(A1: np.ndarray, A2: np.ndarray, M: np.ndarray,
                    method: str = "auto") -> np.ndarray:
    """Solve A1 @ R + R @ A2 = M for dense complex matrices.

    method='vectorized' builds the (n1*n2) x (n1*n2) Kronecker system and
    solves it directly; method='eig' diagonalizes both coefficient matrices
    (fast path, requires well-conditioned eigenvector bases); 'auto' picks
    'eig' when both bases have condition number below 1e6.

    Raises SpectrumCollision when some lam_i(A1) + lam_j(A2) is below
    EPS_SPEC times the coefficient scale.
    """
    A1 = np.atleast_2d(np.asarray(A1, dtype=complex))
    A2 = np.atleast_2d(np.asarray(A2, dtype=complex))
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    scale = max(np.linalg.norm(A1, 2), np.linalg.norm(A2, 2))
    _check_spectra(np.linalg.eigvals(A1), np.linalg.eigvals(A2), scale)

    if method == "auto":
        method = "eig"
        for A in (A1, A2):
            try:
                w, V = np.linalg.eig(A)
                if np.linalg.cond(V) > 1e6:
                    method = "vectorized"
            except np.linalg.LinAlgError:
                method = "vectorized"

    if method == "eig":
        w1, V1 = np.linalg.eig(A1)
        w2, V2 = np.linalg.eig(A2)
        Mt = np.linalg.solve(V1, M @ V2)
        Rt = Mt / (w1[:, None] + w2[None, :])
        return V1 @ np.linalg.solve(V2.T, Rt.T).T

    if method == "vectorized":
        n1, n2 = A1.shape[0], A2.shape[0]
        # row-major vec: vec(A1 R) = (A1 (x) I) vec(R), vec(R A2) = (I (x) A2^T) vec(R)
        K = np.kron(A1, np.eye(n2)) + np.kron(np.eye(n1), A2.T)
        return np.linalg.solve(K, M.reshape(-1)).reshape(n1, n2)

    raise ValueError(f"unknown method {method!r}")


def solve_lyapunov(A: np.ndarray, M: np.ndarray, method: str = "auto") -> np.ndarray:
    """Solve A @ R + R @ A = M (the Lyapunov initial condition)."""
    return solve_sylvester(A, A, M, method=method)


# ---------------------------------------------------------------------------
# the linear system itself
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LinearSystem:
    """State-space triple (-A, B, C) with finite matrices.

    scattering=True asserts that every eigenvalue of A has positive real
    part, so that ||e^{-xA}|| -> 0 and the half-line integrals defining
    R_x and the Hankel symbol converge.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    scattering: bool = False

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=complex))
        B = np.asarray(self.B, dtype=complex)
        C = np.asarray(self.C, dtype=complex)
        if B.ndim == 1:
            B = B.reshape(-1, 1)
        if C.ndim == 1:
            C = C.reshape(1, -1)
        n = A.shape[0]
        if A.shape != (n, n):
            raise ValueError("A must be square")
        if B.shape[0] != n or C.shape[1] != n or B.shape[1] != C.shape[0]:
            raise ValueError(f"incompatible shapes A{A.shape} B{B.shape} C{C.shape}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)
        lam = np.linalg.eigvals(A)
        _check_spectra(lam, lam, np.linalg.norm(A, 2))
        if self.scattering and np.min(lam.real) <= 0:
            raise ValueError("scattering-class system needs Re(lam) > 0 for all eigenvalues")
        object.__setattr__(self, "_eigs", lam)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def eigenvalues(self) -> np.ndarray:
        return self._eigs

    @cached_property
    def R0(self) -> np.ndarray:
        """Solution of A R0 + R0 A = B C."""
        return solve_lyapunov(self.A, self.B @ self.C)

    def exp(self, x) -> np.ndarray:
        """e^{-xA}."""
        return matrix_exp(self.A, x)

    def to_json(self) -> str:
        def enc(M):
            return [[[float(z.real), float(z.imag)] for z in row] for row in np.atleast_2d(M)]
        flags = ["scattering"] if self.scattering else []
        return json.dumps({"A": enc(self.A), "B": enc(self.B), "C": enc(self.C),
                           "flags": flags}, indent=2)

    @staticmethod
    def from_json(text: str) -> "LinearSystem":
        data = json.loads(text)

        def dec(rows):
            return np.array([[complex(re, im) for re, im in row] for row in rows])

        return LinearSystem(dec(data["A"]), dec(data["B"]), dec(data["C"]),
                            scattering="scattering" in data.get("flags", []))


@dataclass(frozen=True)
class StateOperator:
    """The n x n matrix R_x at abscissa x, with its provenance."""

    R: np.ndarray
    x: float
    provenance: str = "propagated"  # "lyapunov-solved" | "propagated"

    def lyapunov_residual(self, sys: LinearSystem) -> float:
        """|| A R_x + R_x A - e^{-xA} BC e^{-xA} ||_F (Lemma 2.2 identity)."""
        E = sys.exp(self.x)
        lhs = sys.A @ self.R + self.R @ sys.A
        rhs = E @ sys.B @ sys.C @ E
        return float(np.linalg.norm(lhs - rhs))


@dataclass(frozen=True)
class BracketOperand:
    """An n x n matrix regarded as a word in the state ring."""

    P: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "P", np.atleast_2d(np.asarray(self.P, dtype=complex)))


def resolvent_at(sys: LinearSystem, x: float, method: str = "propagated") -> StateOperator:
    """R_x = e^{-xA} R_0 e^{-xA} (or a direct Lyapunov solve at x)."""
    E = sys.exp(x)
    if method == "propagated":
        return StateOperator(E @ sys.R0 @ E, x, "propagated")
    if method == "lyapunov":
        R = solve_lyapunov(sys.A, E @ sys.B @ sys.C @ E)
        return StateOperator(R, x, "lyapunov-solved")
    raise ValueError(f"unknown method {method!r}")


def tau(sys: LinearSystem, x: float, mu: complex = 1.0) -> complex:
    """det(I + mu R_x)."""
    R = resolvent_at(sys, x).R
    return complex(np.linalg.det(np.eye(sys.n) + mu * R))


def scattering(sys: LinearSystem, x: float) -> np.ndarray:
    """phi(x) = C e^{-xA} B (m x m)."""
    return sys.C @ sys.exp(x) @ sys.B


def _resolvent_factor(sys: LinearSystem, x: float, mu: complex = 1.0):
    """Return (R_x, F = (I + mu R_x)^{-1} as a solve), raising on singularity."""
    R = resolvent_at(sys, x).R
    M = np.eye(sys.n) + mu * R
    if np.linalg.cond(M) > COND_CAP:
        raise SingularResolvent(f"I + mu R_x numerically singular at x={x:.6g}")
    return R, np.linalg.inv(M)


def bracket(sys: LinearSystem, x: float, P: np.ndarray | BracketOperand) -> np.ndarray:
    """<P> = C e^{-xA} F_x P F_x e^{-xA} B  with F_x = (I + R_x)^{-1} (m x m)."""
    if isinstance(P, BracketOperand):
        P = P.P
    _, F = _resolvent_factor(sys, x)
    E = sys.exp(x)
    return sys.C @ E @ F @ P @ F @ E @ sys.B


def log_tau_derivative(sys: LinearSystem, x: float, mu: complex = 1.0) -> complex:
    """Analytic d/dx log det(I + mu R_x) = -mu trace((I+mu R_x)^{-1} D)
    with D = e^{-xA} BC e^{-xA} = -dR_x/dx."""
    _, F = _resolvent_factor(sys, x, mu)
    E = sys.exp(x)
    D = E @ sys.B @ sys.C @ E
    return complex(-mu * np.trace(F @ D))


def log_tau_second_derivative(sys: LinearSystem, x: float, mu: complex = 1.0) -> complex:
    """Analytic d^2/dx^2 log det(I + mu R_x).

    Differentiating -mu tr(F D) once more, with dF = mu F D F and
    dD = -(A D + D A):
        (log tau)'' = -mu^2 tr((F D)^2) + mu tr(F (A D + D A)).
    """
    _, F = _resolvent_factor(sys, x, mu)
    E = sys.exp(x)
    D = E @ sys.B @ sys.C @ E
    FD = F @ D
    return complex(-(mu**2) * np.trace(FD @ FD) + mu * np.trace(F @ (sys.A @ D + D @ sys.A)))


def potential(sys: LinearSystem, x: float, check_tol: float = 1e-8) -> complex:
    """u(x) = -2 (log tau)'', returned as -4 <A> when m = 1.

    Both analytic routes (the bracket and the trace formula) are evaluated
    and must agree to check_tol relative; they are algebraically identical,
    so a mismatch flags a conditioning problem.
    """
    u_trace = -2.0 * log_tau_second_derivative(sys, x)
    if sys.m == 1:
        u_br = complex(-4.0 * bracket(sys, x, sys.A)[0, 0])
        scale = max(1.0, abs(u_br))
        if abs(u_br - u_trace) > check_tol * scale:
            raise SingularResolvent(
                f"bracket/trace potential routes disagree at x={x:.6g}: "
                f"{u_br:.6g} vs {u_trace:.6g}")
        return u_br
    return u_trace


# ---------------------------------------------------------------------------
# analytic x-derivatives of brackets via matrix jets
# ---------------------------------------------------------------------------

class MatrixJet:
    """Matrix value with derivatives w.r.t. x up to a fixed order.

    Supports products (Leibniz), sums, and powers -- enough to build words
    of the state ring and differentiate a bracket analytically instead of
    by finite differences.
    """

    __slots__ = ("d",)

    def __init__(self, derivatives):
        self.d = [np.asarray(m, dtype=complex) for m in derivatives]

    @property
    def order(self):
        return len(self.d) - 1

    @staticmethod
    def constant(M, order):
        M = np.asarray(M, dtype=complex)
        return MatrixJet([M] + [np.zeros_like(M) for _ in range(order)])

    def __add__(self, other):
        return MatrixJet([a + b for a, b in zip(self.d, other.d)])

    def __sub__(self, other):
        return MatrixJet([a - b for a, b in zip(self.d, other.d)])

    def __mul__(self, scalar):
        return MatrixJet([scalar * a for a in self.d])

    __rmul__ = __mul__

    def __matmul__(self, other):
        out = []
        for k in range(len(self.d)):
            acc = np.zeros_like(self.d[0])
            for j in range(k + 1):
                acc = acc + math.comb(k, j) * (self.d[j] @ other.d[k - j])
            out.append(acc)
        return MatrixJet(out)


def _f_jet(sys: LinearSystem, x: float, order: int) -> MatrixJet:
    """Jet of F_x = (I + R_x)^{-1}, from F' = A F + F A - 2 F A F."""
    _, F0 = _resolvent_factor(sys, x)
    A = sys.A
    ds = [F0]
    # differentiate F' = AF + FA - 2 FAF repeatedly with Leibniz on FAF
    for k in range(order):
        term = A @ ds[k] + ds[k] @ A
        for j in range(k + 1):
            term = term - 2 * math.comb(k, j) * (ds[j] @ A @ ds[k - j])
        ds.append(term)
    return MatrixJet(ds)


def _exp_jet(sys: LinearSystem, x: float, order: int, side: str) -> MatrixJet:
    E = sys.exp(x)
    A = sys.A
    ds = [E]
    for _ in range(order):
        ds.append(-A @ ds[-1] if side == "left" else -ds[-1] @ A)
    return MatrixJet(ds)


def bracket_jet(sys: LinearSystem, x: float, P: np.ndarray, order: int = 3):
    """<P> and its x-derivatives up to `order`, all analytic.

    P is treated as a constant word; to differentiate a word containing F_x,
    assemble the jet with MatrixJet and _f_jet directly.
    """
    P = np.atleast_2d(np.asarray(P, dtype=complex))
    F = _f_jet(sys, x, order)
    EL = _exp_jet(sys, x, order, "left")      # e^{-xA} acting before F (left factor)
    ER = _exp_jet(sys, x, order, "right")
    Pj = MatrixJet.constant(P, order)
    G = EL @ F @ Pj @ F @ ER                   # e^{-xA} F P F e^{-xA}
    return [sys.C @ g @ sys.B for g in G.d]


# ---------------------------------------------------------------------------
# stock systems for tests, examples and the CLI
# ---------------------------------------------------------------------------

def one_soliton(lam: float = 1.0, b: float = 1.0, c: float = 1.0) -> LinearSystem:
    return LinearSystem(np.array([[lam]]), np.array([[b]]), np.array([[c]]),
                        scattering=lam > 0)


def diagonal_system(lams, bs, cs, scattering=True) -> LinearSystem:
    lams = np.asarray(lams, dtype=complex)
    return LinearSystem(np.diag(lams), np.asarray(bs, dtype=complex).reshape(-1, 1),
                        np.asarray(cs, dtype=complex).reshape(1, -1),
                        scattering=scattering)


def jordan_system(lam: float, size: int, b=None, c=None) -> LinearSystem:
    """Defective system: A a single Jordan block at lam."""
    A = lam * np.eye(size) + np.diag(np.ones(size - 1), 1)
    if b is None:
        b = np.zeros(size)
        b[-1] = 1.0
    if c is None:
        c = np.zeros(size)
        c[0] = math.factorial(size - 1)
    return LinearSystem(A, np.asarray(b, dtype=complex), np.asarray(c, dtype=complex),
                        scattering=lam > 0)


def random_scattering_system(n: int, rng: np.random.Generator,
                             re_min: float = 0.5, re_max: float = 2.0,
                             complex_entries: bool = False) -> LinearSystem:
    """Random scattering-class system with well-separated spectrum."""
    lam = rng.uniform(re_min, re_max, n).astype(complex)
    if complex_entries:
        lam = lam + 1j * rng.uniform(-0.3, 0.3, n)
    Q = rng.normal(size=(n, n))
    # mild similarity keeps the eigenvector basis well conditioned
    V = np.eye(n) + 0.3 * Q / max(1.0, np.linalg.norm(Q, 2))
    A = V @ np.diag(lam) @ np.linalg.inv(V)
    b = rng.uniform(0.5, 1.5, n).astype(complex)
    c = rng.uniform(0.5, 1.5, n).astype(complex)
    if complex_entries:
        b = b * np.exp(1j * rng.uniform(0, 0.5, n))
        c = c * np.exp(1j * rng.uniform(0, 0.5, n))
    return LinearSystem(A, b.reshape(-1, 1), c.reshape(1, -1), scattering=True)
