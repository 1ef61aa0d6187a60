"""Residual reports, finite-difference stencils and convergence-order fits.

Every verification routine in the package returns a :class:`ResidualReport`
so that the CLI can serialize results uniformly (JSON for machine checks,
CSV for per-point data).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ResidualReport",
    "fd_derivative",
    "fd_derivative_sweep",
    "convergence_order",
]


@dataclass
class ResidualReport:
    """Per-grid-point residuals of an identity or PDE check.

    grid        : abscissae the residuals were sampled at (any shape)
    residuals   : residual magnitudes, same shape as grid
    max         : max residual (the headline number)
    order_estimate : empirical convergence order under refinement, or None
    meta        : anything else worth keeping (tolerances, norms, seeds)
    """

    name: str
    grid: np.ndarray
    residuals: np.ndarray
    max: float = 0.0
    order_estimate: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.grid = np.asarray(self.grid)
        self.residuals = np.asarray(self.residuals, dtype=float)
        if self.residuals.size and not self.max:
            self.max = float(np.max(self.residuals))

    def to_json(self) -> str:
        payload = {
            "name": self.name,
            "grid": np.asarray(self.grid, dtype=float).ravel().tolist(),
            "residuals": self.residuals.ravel().tolist(),
            "max": self.max,
            "order_estimate": self.order_estimate,
            "meta": _jsonable(self.meta),
        }
        return json.dumps(payload, indent=2)

    def to_csv(self) -> str:
        lines = ["x,residual"]
        g = np.asarray(self.grid, dtype=float).ravel()
        r = self.residuals.ravel()
        m = min(g.size, r.size)
        for i in range(m):
            lines.append(f"{g[i]:.12e},{r[i]:.12e}")
        return "\n".join(lines) + "\n"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


# 5-point central stencils (4th order for orders 1 and 2; 2nd order for 3, 4).
_STENCILS = {
    1: (np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0, 1),
    2: (np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0, 2),
    3: (np.array([-1.0, 2.0, 0.0, -2.0, 1.0]) / 2.0, 3),
    4: (np.array([1.0, -4.0, 6.0, -4.0, 1.0]), 4),
}


def fd_derivative(f, x, order: int, h: float):
    """Central 5-point finite-difference derivative of callable f at x."""
    coeffs, pw = _STENCILS[order]
    vals = np.array([f(x + k * h) for k in (-2, -1, 0, 1, 2)])
    return np.tensordot(coeffs, vals, axes=(0, 0)) / h**pw


def fd_derivative_sweep(f, x, order: int, h_values=(1e-2, 5e-3, 2e-3, 1e-3, 5e-4)):
    """Finite-difference derivative with an automatic step sweep.

    Evaluates the 5-point stencil for each h and returns the value at the
    step whose refinement is most self-consistent (smallest change to the
    next finer step), i.e. the Richardson-consistent member of the sweep.
    Returns (value, error_estimate).
    """
    vals = [fd_derivative(f, x, order, h) for h in h_values]
    diffs = [np.max(np.abs(np.asarray(vals[i + 1] - vals[i]))) for i in range(len(vals) - 1)]
    i = int(np.argmin(diffs))
    return vals[i + 1], diffs[i]


def convergence_order(h_values, errors) -> float:
    """Least-squares slope of log(error) against log(h)."""
    h = np.asarray(h_values, dtype=float)
    e = np.asarray(errors, dtype=float)
    keep = e > 0
    if keep.sum() < 2:
        return float("nan")
    slope = np.polyfit(np.log(h[keep]), np.log(e[keep]), 1)[0]
    return float(slope)
