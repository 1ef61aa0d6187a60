"""tausys: tau functions, Fredholm determinants, and integrable-PDE
solutions realized from finite-dimensional and periodic linear systems.

The package cross-validates independent computational routes for the same
objects: state-space determinants against Nystrom-discretized Hankel
operators, operator formulas against log-determinant derivatives, and
closed-form elliptic/Painleve expressions against ODE/PDE residuals.
"""

from .errors import (BlowUp, CollisionDetected, ConfigError,
                     ConstraintViolated, HypothesisFailed, LatticePoint,
                     NotAContraction, PoleHit, RankDeficient,
                     SingularResolvent, SpectralPole, SpectrumCollision,
                     TailTooFat, TausysError, ZeroMinor)
from .linsys import (LinearSystem, StateOperator, bracket, diagonal_system,
                     jordan_system, matrix_exp, one_soliton, potential,
                     random_scattering_system, resolvent_at, scattering,
                     solve_lyapunov, solve_sylvester, tau)

__version__ = "0.1.0"

__all__ = [
    "LinearSystem", "StateOperator", "matrix_exp", "solve_lyapunov",
    "solve_sylvester", "resolvent_at", "tau", "scattering", "bracket",
    "potential", "one_soliton", "diagonal_system", "jordan_system",
    "random_scattering_system",
    "TausysError", "SpectrumCollision", "SingularResolvent", "SpectralPole",
    "TailTooFat", "NotAContraction", "ZeroMinor", "RankDeficient", "PoleHit",
    "BlowUp", "LatticePoint", "HypothesisFailed", "ConstraintViolated",
    "CollisionDetected", "ConfigError",
]
