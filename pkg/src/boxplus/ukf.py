"""Unscented Kalman filter on boxplus manifolds.

Sigma points are unweighted: ``mu``, ``mu [+] L_i`` and ``mu [+] -L_i`` where
``L`` is the Cholesky factor of the covariance.  Means of propagated points
come from :func:`boxplus.stats.mean_of_points` started at the first point, and
covariances use the factor 1/2 over the ``2n+1`` boxminus residuals.

The correction step does not simply move the mean by the gain-weighted
innovation.  It pushes sigma points of the corrected tangent distribution
through boxplus and re-estimates mean and covariance, so that the covariance
is expressed about the new mean.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Any, Callable

import numpy as np

from .errors import ContractViolation, SigmaPointWarning, SingularInnovation
from .manifolds import Manifold
from .stats import cholesky_sqrt, mean_of_points, symmetrize

__all__ = [
    "UkfBelief", "ProcessModel", "MeasurementModel", "generate_sigma_points",
    "sigma_stats", "predict", "update", "Ukf",
]

# sigma-point columns must stay inside half the chart radius
SIGMA_SPREAD_LIMIT = 0.5


@dataclass(frozen=True)
class UkfBelief:
    """Mean point and tangent covariance; ``sigma_points`` caches the last correction's set."""

    manifold: Manifold
    mean: np.ndarray
    cov: np.ndarray
    sigma_points: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        n = self.manifold.dof
        mean = self.manifold._point(self.mean)
        cov = np.asarray(self.cov, dtype=np.float64)
        if mean.shape != (self.manifold.rep_size,):
            raise ContractViolation("belief mean must be a single point")
        if cov.shape != (n, n):
            raise ContractViolation(f"belief cov must be {n}x{n}, got {cov.shape}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)


@dataclass(frozen=True)
class ProcessModel:
    """``x_t = g(u, x_{t-1}) [+] N(0, R)``.

    ``g(u, X)`` maps a ``(k, rep_size)`` batch when ``batched`` is true,
    otherwise a single point.  ``noise`` is a matrix or ``noise(u) -> matrix``.
    """

    g: Callable
    noise: Any
    batched: bool = True

    def propagate(self, u, pts):
        if self.batched:
            return np.asarray(self.g(u, pts), dtype=np.float64)
        return np.stack([np.asarray(self.g(u, p), dtype=np.float64) for p in pts])

    def cov(self, u):
        return np.asarray(self.noise(u) if callable(self.noise) else self.noise, dtype=np.float64)


@dataclass(frozen=True)
class MeasurementModel:
    """``z = h(x) [+]_M N(0, Q)`` with ``M`` given by ``manifold``."""

    h: Callable
    noise: Any
    manifold: Manifold
    batched: bool = True

    def predict(self, pts):
        if self.batched:
            return np.asarray(self.h(pts), dtype=np.float64)
        return np.stack([np.asarray(self.h(p), dtype=np.float64) for p in pts])

    def cov(self):
        return np.asarray(self.noise() if callable(self.noise) else self.noise, dtype=np.float64)


def _check_spread(manifold, L):
    ratio = manifold.chart_ratio(L.T)
    worst = float(np.max(ratio)) if ratio.size else 0.0
    if worst >= SIGMA_SPREAD_LIMIT:
        warnings.warn(
            f"sigma-point column reaches {worst:.3f} of the chart radius (limit {SIGMA_SPREAD_LIMIT}); "
            "statistics recovered through boxminus will be distorted",
            SigmaPointWarning,
            stacklevel=3,
        )


def generate_sigma_points(manifold, mean, cov, check=True):
    """Return the ``(2n+1, rep_size)`` set ``mu, mu [+] L_i, mu [+] -L_i``."""
    L = cholesky_sqrt(cov)
    if check:
        _check_spread(manifold, L)
    n = manifold.dof
    offsets = np.zeros((2 * n + 1, n))
    offsets[1:n + 1] = L.T
    offsets[n + 1:] = -L.T
    return manifold.boxplus(mean, offsets)


def sigma_stats(manifold, pts):
    """Mean (by fixed-point iteration from point 0) and half-sum covariance of a set."""
    mu = mean_of_points(manifold, pts, mu0=pts[0])
    d = manifold.boxminus(pts, mu)
    return mu, symmetrize(0.5 * d.T @ d), d


def predict(belief, u, model, reuse_sigma_points=False):
    """Time update; returns a new belief."""
    m = belief.manifold
    if reuse_sigma_points and belief.sigma_points is not None:
        pts = belief.sigma_points
    else:
        pts = generate_sigma_points(m, belief.mean, belief.cov)
    moved = model.propagate(u, pts)
    mu, cov, _ = sigma_stats(m, moved)
    return UkfBelief(m, mu, symmetrize(cov + model.cov(u)))


def update(belief, z, model):
    """Measurement update with re-centering of the corrected distribution."""
    m = belief.manifold
    mm = model.manifold
    n = m.dof
    pts = generate_sigma_points(m, belief.mean, belief.cov)
    zpts = model.predict(pts)
    z_hat, s_cov, dz = sigma_stats(mm, zpts)
    s_cov = symmetrize(s_cov + model.cov())
    dx = m.boxminus(pts, belief.mean)
    cross = 0.5 * dx.T @ dz
    try:
        s_chol = np.linalg.cholesky(s_cov)
    except np.linalg.LinAlgError:
        raise SingularInnovation("singular innovation covariance") from None
    if not np.all(np.isfinite(s_chol)) or np.min(np.diag(s_chol)) <= 0.0:
        raise SingularInnovation("singular innovation covariance")
    # K = cross S^-1 via two triangular solves
    gain = np.linalg.solve(s_chol.T, np.linalg.solve(s_chol, cross.T)).T
    innov = mm.boxminus(mm._point(z), z_hat)
    delta = gain @ innov
    post = symmetrize(belief.cov - gain @ s_cov @ gain.T)
    L = cholesky_sqrt(post)
    offsets = np.empty((2 * n + 1, n))
    offsets[:] = delta
    offsets[1:n + 1] += L.T
    offsets[n + 1:] -= L.T
    moved = m.boxplus(belief.mean, offsets)
    mu, cov, _ = sigma_stats(m, moved)
    return UkfBelief(m, mu, cov, sigma_points=moved)


class Ukf:
    """Stateful convenience wrapper around :func:`predict` and :func:`update`.

    Examples
    --------
    >>> import numpy as np
    >>> from boxplus.manifolds import Euclidean
    >>> f = Ukf(Euclidean(2), np.zeros(2), np.eye(2))
    >>> f.predict(None, ProcessModel(lambda u, x: x, 0.5 * np.eye(2)))
    >>> np.diag(f.cov).tolist()
    [1.5, 1.5]
    """

    def __init__(self, manifold, mean, cov, reuse_sigma_points=False):
        self.belief = UkfBelief(manifold, mean, cov)
        self.reuse_sigma_points = reuse_sigma_points

    @property
    def mean(self):
        return self.belief.mean

    @property
    def cov(self):
        return self.belief.cov

    def predict(self, u, model):
        self.belief = predict(self.belief, u, model, self.reuse_sigma_points)

    def update(self, z, model):
        b = update(self.belief, z, model)
        if not self.reuse_sigma_points:
            b = replace(b, sigma_points=None)
        self.belief = b
