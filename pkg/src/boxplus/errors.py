"""Exception types raised across the package."""


class ContractViolation(ValueError):
    """Shape or structure mismatch between arguments."""


class CovarianceNotPD(ValueError):
    """Cholesky factorization failed even after jitter."""


class ChartExceeded(RuntimeError):
    """Distribution is too wide for the chart radius of the manifold."""


class MeanNotConverged(RuntimeError):
    """Fixed-point mean iteration hit its iteration cap.

    Attributes
    ----------
    last : ndarray
        Last iterate.
    residual : float
        Norm of the weighted mean residual at ``last``.
    """

    def __init__(self, message, last=None, residual=float("nan")):
        super().__init__(message)
        self.last = last
        self.residual = residual


class SingularInnovation(ValueError):
    """Innovation covariance could not be inverted."""


class RankDeficient(ValueError):
    """Normal equations are singular."""


class LMStalled(RuntimeError):
    """Levenberg-Marquardt damping overflowed without an accepted step."""


class SigmaPointWarning(RuntimeWarning):
    """Sigma-point spread is too wide for the chart to be trusted."""
