"""Exception types shared across the package."""


class TausysError(Exception):
    """Base class for all package errors."""


class SpectrumCollision(TausysError):
    """An eigenvalue pair (lam_j, lam_k) has lam_j + lam_k too close to zero
    for the Lyapunov/Sylvester solve to be well posed."""

    def __init__(self, lam_j, lam_k, threshold):
        self.pair = (lam_j, lam_k)
        self.threshold = threshold
        super().__init__(
            f"eigenvalue pair ({lam_j:.6g}, {lam_k:.6g}) has |sum| "
            f"{abs(lam_j + lam_k):.3e} < {threshold:.3e}"
        )


class SingularResolvent(TausysError):
    """I + mu*R_x is numerically singular (evaluation at or near a zero of tau)."""


class SpectralPole(TausysError):
    """The spectral parameter hit an eigenvalue of A."""


class TailTooFat(TausysError):
    """The truncated half-line tail of a kernel exceeds the tail tolerance."""


class NotAContraction(TausysError):
    """A discretized kernel has an eigenvalue outside [0, 1] beyond tolerance."""


class ZeroMinor(TausysError):
    """A Hankel minor tau_n vanishes where the Toda identity needs it nonzero."""


class RankDeficient(TausysError):
    """Controllability/observability block does not have full rank."""


class PoleHit(TausysError):
    """Cauchy determinant evaluated too close to a pole 1 - x_r*y_s = 0."""


class BlowUp(TausysError):
    """ODE solution exceeded the blow-up cap; carries the last safe abscissa."""

    def __init__(self, x_last, message=""):
        self.x_last = x_last
        super().__init__(message or f"solution blew up; last safe x = {x_last:.6g}")


class LatticePoint(TausysError):
    """Elliptic evaluation requested at (or too near) a lattice point."""


class HypothesisFailed(TausysError):
    """A structural hypothesis of the theorem being checked does not hold
    for the constructed system (e.g. the periodic anti-symmetry relation)."""


class ConstraintViolated(TausysError):
    """Initial pole configuration violates the locus constraint."""


class CollisionDetected(TausysError):
    """Two poles collided (pairwise difference reached the lattice)."""


class ConfigError(TausysError):
    """Invalid CLI/run configuration."""
