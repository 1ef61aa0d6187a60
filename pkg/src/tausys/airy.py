"""Airy function, Airy-kernel factorization, Tracy-Widom F2, Painleve II.

The Hankel symbol throughout is phi(x) = Ai(x/2), so the operator
Gamma_{phi,(x)} has kernel Ai((s+t)/2 + x) on L^2(0, oo).  Its square over
four is, after the unitary substitution s -> 2(a - x), the classical Airy
kernel on L^2(x, oo); hence

    F2(x) = det(I - Gamma^2/4).

The second route integrates the Hastings-McLeod branch of Painleve II
backward from x0 = 8 and evaluates F2 = exp(-1/2 int (s-x) u ds) with
u = 2 v^2 (the mu = i/2 coupling, for which -8 mu^2 = 2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import BlowUp, SingularResolvent
from .fredholm import DiscretizedKernel, HalfLineGrid, fredholm_det, make_grid
from .reporting import ResidualReport, fd_derivative_sweep

__all__ = [
    "airy",
    "airy_prime",
    "airy_factorization_residual",
    "airy_hankel_matrix",
    "f2_determinant",
    "PainleveSolution",
    "painleve2_solve",
    "pII_operator_route",
    "f2_painleve",
    "hamiltonian_flow_check",
]

_AI0 = 3.0 ** (-2.0 / 3.0) / math.gamma(2.0 / 3.0)
_AIP0 = -(3.0 ** (-1.0 / 3.0)) / math.gamma(1.0 / 3.0)
_SERIES_CUT = 6.0
_N_TERMS = 60


def _maclaurin(x: float):
    """Ai and Ai' from the two power-series solutions of y'' = x y.

    f = sum c_k x^{3k}, g = sum d_k x^{3k+1};
    Ai = Ai(0) f + Ai'(0) g, Ai' = Ai(0) f' + Ai'(0) g'.
    """
    f, g = 1.0, x
    fp, gp = 0.0, 1.0
    c = d = 1.0
    p3k = 1.0  # x^{3k}
    for k in range(1, _N_TERMS):
        c /= (3 * k) * (3 * k - 1)
        d /= (3 * k + 1) * (3 * k)
        p3km1 = p3k * x * x     # x^{3k-1}
        p3k = p3km1 * x         # x^{3k}
        f += c * p3k
        g += d * p3k * x
        fp += c * (3 * k) * p3km1
        gp += d * (3 * k + 1) * p3k
    ai = _AI0 * f + _AIP0 * g
    aip = _AI0 * fp + _AIP0 * gp
    return ai, aip


def _asymptotic_coeffs(kmax: int = 24):
    u = [1.0]
    for k in range(kmax):
        u.append(u[-1] * (6 * k + 5) * (6 * k + 3) * (6 * k + 1) / (216.0 * (2 * k + 1) * (k + 1)))
    u = np.array(u)
    k = np.arange(u.size)
    v = -u * (6 * k + 1) / (6 * k - 1.0)  # v_0 = +1
    return u, v


_UK, _VK = _asymptotic_coeffs()


def _opt_sum(coeffs, zeta: float, stride: int = 1, offset: int = 0):
    """Optimally truncated alternating sum  sum_k (-1)^k c_{off+k*stride} / zeta^{off+k*stride}."""
    total, prev = 0.0, math.inf
    k = 0
    while offset + stride * k < coeffs.size:
        idx = offset + stride * k
        term = coeffs[idx] / zeta**idx
        if abs(term) > prev:
            break
        total += (-1.0) ** k * term
        prev = abs(term)
        k += 1
    return total


def _airy_asym_pos(x: float):
    zeta = 2.0 / 3.0 * x**1.5
    damp = math.exp(-zeta) / (2.0 * math.sqrt(math.pi))
    ai = damp / x**0.25 * _opt_sum(_UK, zeta)
    aip = -damp * x**0.25 * _opt_sum(_VK, zeta)
    return ai, aip


def _airy_asym_neg(x: float):
    z = -x
    zeta = 2.0 / 3.0 * z**1.5
    arg = zeta + math.pi / 4.0
    c, s = math.cos(arg), math.sin(arg)
    ai = (s * _opt_sum(_UK, zeta, 2, 0) - c * _opt_sum(_UK, zeta, 2, 1)) \
        / (math.sqrt(math.pi) * z**0.25)
    aip = -(z**0.25) / math.sqrt(math.pi) \
        * (c * _opt_sum(_VK, zeta, 2, 0) + s * _opt_sum(_VK, zeta, 2, 1))
    return ai, aip


def _airy_pair(x: float):
    if abs(x) <= _SERIES_CUT:
        return _maclaurin(x)
    if x > 0:
        return _airy_asym_pos(x)
    return _airy_asym_neg(x)


# vectorized evaluation: series with array terms, asymptotics with a
# per-element "still decreasing" mask implementing optimal truncation

def _maclaurin_vec(x: np.ndarray):
    f, g = np.ones_like(x), x.copy()
    fp, gp = np.zeros_like(x), np.ones_like(x)
    c = d = 1.0
    p3k = np.ones_like(x)
    for k in range(1, _N_TERMS):
        c /= (3 * k) * (3 * k - 1)
        d /= (3 * k + 1) * (3 * k)
        p3km1 = p3k * x * x
        p3k = p3km1 * x
        f += c * p3k
        g += d * p3k * x
        fp += c * (3 * k) * p3km1
        gp += d * (3 * k + 1) * p3k
    return _AI0 * f + _AIP0 * g, _AI0 * fp + _AIP0 * gp


def _opt_sum_vec(coeffs, zeta: np.ndarray, stride: int = 1, offset: int = 0):
    total = np.zeros_like(zeta)
    prev = np.full_like(zeta, np.inf)
    live = np.ones(zeta.shape, dtype=bool)
    k = 0
    while offset + stride * k < coeffs.size and live.any():
        idx = offset + stride * k
        term = coeffs[idx] / zeta**idx
        live &= np.abs(term) <= prev
        signed = (-1.0) ** k * term
        total[live] += signed[live]
        prev = np.abs(term)
        k += 1
    return total


def _airy_asym_pos_vec(x: np.ndarray):
    zeta = 2.0 / 3.0 * x**1.5
    damp = np.exp(-zeta) / (2.0 * math.sqrt(math.pi))
    ai = damp / x**0.25 * _opt_sum_vec(_UK, zeta)
    aip = -damp * x**0.25 * _opt_sum_vec(_VK, zeta)
    return ai, aip


def _airy_asym_neg_vec(x: np.ndarray):
    z = -x
    zeta = 2.0 / 3.0 * z**1.5
    arg = zeta + math.pi / 4.0
    c, s = np.cos(arg), np.sin(arg)
    ai = (s * _opt_sum_vec(_UK, zeta, 2, 0) - c * _opt_sum_vec(_UK, zeta, 2, 1)) \
        / (math.sqrt(math.pi) * z**0.25)
    aip = -(z**0.25) / math.sqrt(math.pi) \
        * (c * _opt_sum_vec(_VK, zeta, 2, 0) + s * _opt_sum_vec(_VK, zeta, 2, 1))
    return ai, aip


def _airy_both(x):
    x = np.asarray(x, dtype=float)
    ai = np.empty_like(x)
    aip = np.empty_like(x)
    mser = np.abs(x) <= _SERIES_CUT
    mpos = x > _SERIES_CUT
    mneg = x < -_SERIES_CUT
    if mser.any():
        ai[mser], aip[mser] = _maclaurin_vec(x[mser])
    if mpos.any():
        ai[mpos], aip[mpos] = _airy_asym_pos_vec(x[mpos])
    if mneg.any():
        ai[mneg], aip[mneg] = _airy_asym_neg_vec(x[mneg])
    return ai, aip


def airy(x):
    """Ai(x): Maclaurin series for |x| <= 6, asymptotic expansions beyond."""
    if np.ndim(x) == 0:
        return _airy_pair(float(x))[0]
    return _airy_both(x)[0]


def airy_prime(x):
    """Ai'(x), same evaluation strategy as airy()."""
    if np.ndim(x) == 0:
        return _airy_pair(float(x))[1]
    return _airy_both(x)[1]


# ---------------------------------------------------------------------------
# kernel machinery
# ---------------------------------------------------------------------------

def phi_airy(xi):
    """The Hankel symbol phi(xi) = Ai(xi/2)."""
    return airy(np.asarray(xi) / 2.0)


def airy_hankel_matrix(x: float, m_nodes: int = 128) -> DiscretizedKernel:
    """Symmetrized Nystrom matrix of Gamma_{phi,(x)}, kernel Ai((s+t)/2 + x).

    Grid length T = 14 - x keeps the far-corner kernel argument at 14,
    where Ai is below 1e-15.
    """
    T = max(14.0 - x, 4.0)
    grid = make_grid(T, m_nodes)
    t = grid.nodes
    K = airy((t[:, None] + t[None, :]) / 2.0 + x)
    sw = np.sqrt(grid.weights)
    return DiscretizedKernel(sw[:, None] * K * sw[None, :], grid, symbol="Ai(./2)", x=x)


def airy_factorization_residual(x: float, pairs=None, m_nodes: int = 160) -> float:
    """max |integrable-form kernel - quadrature of the Gamma^2 form|.

    The Gamma^2 form is K(t,z) = int_{2x}^oo phi(t+s) phi(s+z) ds with
    phi = Ai(./2); the integrable form, after scaling a = (t+2x)/2 etc., is
    2 (Ai(a) Ai'(b) - Ai'(a) Ai(b)) / (a - b), with the L'Hopital value
    2 (Ai'(b)^2 - b Ai(b)^2) on the diagonal.
    """
    if pairs is None:
        pairs = [(0.5, 0.5), (1.0, 2.0), (0.25, 1.5), (2.0, 3.0), (0.0, 0.75)]
    T = max(14.0 - x, 6.0) * 2.0
    grid = make_grid(T, max(m_nodes, 128))
    worst = 0.0
    for t, z in pairs:
        s = grid.nodes + 2 * x
        quad = float(np.real(grid.integrate(phi_airy(t + s) * phi_airy(s + z))))
        a = (t + 2 * x) / 2.0
        b = (z + 2 * x) / 2.0
        if abs(a - b) < 1e-9:
            closed = 2.0 * (airy_prime(b) ** 2 - b * airy(b) ** 2)
        else:
            closed = 2.0 * (airy(a) * airy_prime(b) - airy_prime(a) * airy(b)) / (a - b)
        worst = max(worst, abs(quad - closed))
    return worst


def f2_determinant(x: float, m_nodes: int = 128) -> float:
    """Tracy-Widom F2(x) = det(I - Gamma_{phi,(x)}^2 / 4) via eigenvalues."""
    K = airy_hankel_matrix(x, m_nodes)
    g = np.linalg.eigvalsh(K.M.real)
    return float(np.prod(1.0 - 0.25 * g**2))


# ---------------------------------------------------------------------------
# Painleve II (Hastings-McLeod branch, v = -q so v ~ -Ai at +oo)
# ---------------------------------------------------------------------------

@dataclass
class PainleveSolution:
    """Dense solution of v'' = x v + 2 v^3 on [x_min, x0], decreasing grid."""

    grid: np.ndarray
    v: np.ndarray
    v_prime: np.ndarray
    alpha: float
    _dense: object = None

    def __call__(self, x):
        if self._dense is not None:
            return self._dense(np.asarray(x))[0]
        return np.interp(-np.asarray(x), -self.grid, self.v)

    def derivative(self, x):
        if self._dense is not None:
            return self._dense(np.asarray(x))[1]
        return np.interp(-np.asarray(x), -self.grid, self.v_prime)

    def ode_residual(self, x_vals) -> np.ndarray:
        res = []
        for xx in x_vals:
            d2, _ = fd_derivative_sweep(self.__call__, xx, 2,
                                        h_values=(2e-2, 1e-2, 5e-3))
            res.append(abs(d2 - xx * self(xx) - 2.0 * self(xx) ** 3))
        return np.array(res)

    def to_csv(self, x_vals=None) -> str:
        """CSV body 'x,v,v_prime,residual' on the given (or stored) grid."""
        if x_vals is None:
            x_vals = self.grid[::max(1, len(self.grid) // 200)]
        res = self.ode_residual(x_vals)
        lines = ["x,v,v_prime,residual"]
        for xx, rr in zip(x_vals, res):
            lines.append(f"{xx:.12e},{float(self(xx)):.12e},"
                         f"{float(self.derivative(xx)):.12e},{rr:.3e}")
        return "\n".join(lines) + "\n"


V_CAP = 1e3


def painleve2_solve(x_min: float, x0: float = 8.0, seed=None,
                    rtol: float = 1e-12, atol: float = 1e-13) -> PainleveSolution:
    """Integrate v'' = x v + 2 v^3 backward from x0, seeded v = -Ai(x0).

    The Hastings-McLeod branch is unstable forward in x but stable backward
    toward moderate negative x; below about x = -6 roundoff drifts the
    computed orbit off the branch, so that is the supported domain.  Seeds
    off the branch (or any orbit crossing the |v| cap) raise BlowUp with
    the last safe abscissa.
    """
    if x_min >= x0:
        raise ValueError("x_min must be below the seed abscissa")

    def rhs(x, yv):
        return [yv[1], x * yv[0] + 2.0 * yv[0] ** 3]

    def blowup(x, yv):
        return abs(yv[0]) - V_CAP

    blowup.terminal = True
    if seed is None:
        seed = [-airy(x0), -airy_prime(x0)]
    sol = solve_ivp(rhs, (x0, x_min), list(seed), method="DOP853",
                    rtol=rtol, atol=atol, dense_output=True, events=blowup)
    if sol.status == 1:  # blow-up event fired
        raise BlowUp(float(sol.t[-1]))
    xs = sol.t
    return PainleveSolution(xs, sol.y[0], sol.y[1], 0.0, sol.sol)


def pII_operator_route(x: float, mu: complex = 0.5j, m_nodes: int = 192) -> float:
    """v(x) = V(x, x) from the discretized Hankel resolvent.

    V(x,x) = -[(I + mu^2 Gamma^2)^{-1} phi_x](0) with phi_x(s) = phi(s + 2x);
    for mu = i/2 this is the Hastings-McLeod value -q(x), asymptotic to
    -Ai(x) as x -> +oo.  Nystrom solve plus Nystrom interpolation at s = 0.
    """
    K = airy_hankel_matrix(x, m_nodes)
    grid = K.grid
    sw = np.sqrt(grid.weights)
    mu2 = complex(mu) ** 2
    g = sw * phi_airy(grid.nodes + 2 * x)
    A = np.eye(grid.m_nodes) + mu2 * (K.M @ K.M)
    try:
        f = np.linalg.solve(A, g)
    except np.linalg.LinAlgError as exc:
        raise SingularResolvent(f"I + mu^2 Gamma^2 singular at x={x:.4g}") from exc
    # Nystrom extension to s = 0: f(0) = phi(2x) - mu^2 (Gamma^2 f)(0)
    k0 = grid.weights * phi_airy(grid.nodes + 2 * x)       # kernel row at s=0
    gamma_f = K.M @ f
    f0 = phi_airy(2 * x) - mu2 * float(np.real(k0 @ (gamma_f / sw)))
    return float(-np.real(f0))


def f2_painleve(x: float, sol: PainleveSolution | None = None,
                n_quad: int = 400) -> float:
    """F2(x) = exp(-1/2 int_x^oo (s - x) u(s) ds) with u = 2 v^2.

    Gauss-Legendre on [x, 8] over the dense Painleve solution plus the
    Ai^2 tail beyond the seed point (u ~ 2 Ai^2 there).
    """
    x0 = 8.0
    if sol is None:
        sol = painleve2_solve(min(x, 0.0) - 0.5)
    xg, wg = np.polynomial.legendre.leggauss(n_quad)
    s = (xg + 1.0) * (x0 - x) / 2.0 + x
    w = wg * (x0 - x) / 2.0
    u = 2.0 * np.asarray(sol(s)) ** 2
    integral = float(np.sum(w * (s - x) * u))
    # tail: int_{x0}^oo (s-x) 2 Ai(s)^2 ds, negligible but kept for honesty
    st, wt = np.polynomial.legendre.leggauss(40)
    stail = (st + 1.0) * 3.0 + x0
    wtail = wt * 3.0
    integral += float(np.sum(wtail * (stail - x) * 2.0 * airy(stail) ** 2))
    return math.exp(-0.5 * integral)


def hamiltonian_flow_check(x_range=(0.0, 6.0), n_check: int = 25) -> ResidualReport:
    """Integrate the canonical pair v' = -w - v^2, w' = (2w - x) v (alpha = 0),
    seeded from the operator route at the right endpoint.

    Along any orbit v satisfies Painleve II (v'' = x v + 2 v^3); the report
    carries that residual plus two derived identities: the operator-route
    auxiliary w_op = x v^2 - v'^2 + v^4 must satisfy w_op' = v^2, and the
    Hamiltonian tau defined by log tau = -1/2 int (s-x) v^2 ds must satisfy
    -2 (log tau)'' = v^2.
    """
    x_lo, x_hi = x_range
    v0 = pII_operator_route(x_hi)
    vp0 = float(fd_derivative_sweep(lambda s: pII_operator_route(s), x_hi,
                                    1, h_values=(2e-2, 1e-2))[0])
    w0 = -vp0 - v0**2  # canonical momentum consistent with the flow

    def rhs(x, yv):
        v, w = yv
        return [-w - v * v, (2 * w - x) * v]

    def blowup(x, yv):
        return abs(yv[0]) - V_CAP

    blowup.terminal = True
    sol = solve_ivp(rhs, (x_hi, x_lo), [v0, w0], method="DOP853",
                    rtol=1e-12, atol=1e-13, dense_output=True, events=blowup)
    if sol.status == 1:
        raise BlowUp(float(sol.t[-1]))

    xs = np.linspace(x_lo + 0.2, x_hi - 0.2, n_check)
    v = lambda s: sol.sol(s)[0]
    w = lambda s: sol.sol(s)[1]
    pii = []
    for xx in xs:
        d2, _ = fd_derivative_sweep(v, xx, 2, h_values=(2e-2, 1e-2, 5e-3))
        pii.append(abs(d2 - xx * v(xx) - 2.0 * v(xx) ** 3))

    # w_op' = v^2 along the orbit (the 2 i mu v^2 relation at mu = i/2)
    def w_op(s):
        return s * v(s) ** 2 - (-w(s) - v(s) ** 2) ** 2 + v(s) ** 4

    wrel = []
    for xx in xs:
        d1, _ = fd_derivative_sweep(w_op, xx, 1, h_values=(2e-2, 1e-2, 5e-3))
        wrel.append(abs(d1 - v(xx) ** 2))

    # tau identity: -2 (log tau)'' = v^2 where log tau = -1/2 int_x (s-x) v^2
    def logtau(xx):
        sg, wg = np.polynomial.legendre.leggauss(200)
        s = (sg + 1.0) * (x_hi - xx) / 2.0 + xx
        ws = wg * (x_hi - xx) / 2.0
        return -0.5 * float(np.sum(ws * (s - xx) * np.asarray(v(s)) ** 2))

    taures = []
    for xx in xs[::5]:
        d2, _ = fd_derivative_sweep(logtau, xx, 2, h_values=(2e-2, 1e-2))
        taures.append(abs(-2.0 * d2 - v(xx) ** 2))

    rep = ResidualReport("hamiltonian-flow", xs, np.array(pii))
    rep.meta["w_relation_max"] = float(np.max(wrel))
    rep.meta["tau_relation_max"] = float(np.max(taures))
    rep.meta["seed"] = {"x": x_hi, "v": v0, "v_prime": vp0, "w": w0}
    return rep
