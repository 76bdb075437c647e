"""Gaussians, sampling, means and covariances on boxplus manifolds."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ChartExceeded, ContractViolation, CovarianceNotPD, MeanNotConverged
from .manifolds import Manifold

__all__ = [
    "ManifoldGaussian", "cholesky_sqrt", "symmetrize", "sample", "mean_of_points",
    "covariance_of_points", "MeanResult",
]

JITTER = 1e-12
MAX_REJECTIONS = 1000
# a residual below this many ulps of the largest coordinate is noise
ROUNDING_FLOOR = 64 * np.finfo(np.float64).eps


def symmetrize(a):
    a = np.asarray(a, dtype=np.float64)
    return 0.5 * (a + a.T)


def cholesky_sqrt(cov):
    """Lower-triangular ``L`` with ``L @ L.T == cov``.

    An exactly zero matrix gives ``L = 0``.  On failure the factorization is
    retried once with ``JITTER * I`` added.
    """
    cov = np.asarray(cov, dtype=np.float64)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ContractViolation(f"covariance must be square, got {cov.shape}")
    if not np.any(cov):
        return np.zeros_like(cov)
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        pass
    try:
        return np.linalg.cholesky(cov + JITTER * np.eye(cov.shape[0]))
    except np.linalg.LinAlgError:
        raise CovarianceNotPD("covariance not PD") from None


@dataclass(frozen=True)
class ManifoldGaussian:
    """``mean [+] N(0, cov)`` on ``manifold``."""

    manifold: Manifold
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = self.manifold._point(self.mean)
        cov = np.asarray(self.cov, dtype=np.float64)
        n = self.manifold.dof
        if mean.shape != (self.manifold.rep_size,):
            raise ContractViolation("mean must be a single point")
        if cov.shape != (n, n):
            raise ContractViolation(f"cov must be {n}x{n}, got {cov.shape}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)


def sample(g, rng, size=None):
    """Draw from ``g`` with the chart cut-off.

    Draws whose tangent offset falls outside the chart are redrawn.  More than
    ``MAX_REJECTIONS`` rejections for a single sample raise ``ChartExceeded``.
    """
    m = g.manifold
    L = cholesky_sqrt(g.cov)
    k = 1 if size is None else int(size)
    deltas = np.empty((k, m.dof))
    filled = 0
    rejected = 0
    while filled < k:
        need = k - filled
        z = rng.standard_normal((need, m.dof)) @ L.T
        ok = z[m.within_chart(z)]
        deltas[filled:filled + len(ok)] = ok
        filled += len(ok)
        rejected += need - len(ok)
        if rejected > MAX_REJECTIONS * max(1, filled):
            raise ChartExceeded("distribution exceeds chart")
    pts = m.boxplus(g.mean, deltas)
    return pts[0] if size is None else pts


@dataclass
class MeanResult:
    mean: np.ndarray
    iterations: int
    residual: float


def _weights(n, weights):
    if weights is None:
        return np.full(n, 1.0 / n)
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (n,):
        raise ContractViolation(f"need {n} weights, got shape {w.shape}")
    if abs(w.sum() - 1.0) > 1e-12:
        raise ContractViolation(f"weights must sum to 1, got {w.sum()!r}")
    return w


def mean_of_points(manifold, points, weights=None, mu0=None, tol=1e-9, max_iter=100, full_output=False):
    """Weighted mean by fixed-point iteration ``mu <- mu [+] sum w_i (p_i [-] mu)``.

    Parameters
    ----------
    manifold : Manifold
    points : (k, rep_size) array
    weights : (k,) array, optional
        Defaults to uniform weights.
    mu0 : point, optional
        Initial guess; defaults to ``points[0]``.
    tol : float
        Stop once the norm of the weighted mean residual is at most ``tol``.
        The threshold is raised to the rounding floor of the stored values,
        ``ROUNDING_FLOOR * max(1, max |points|)``, when that is larger.
    max_iter : int
        Maximum number of boxplus updates.

    Returns
    -------
    ndarray, or MeanResult if ``full_output``.  ``iterations`` counts the
    updates applied, so a set of identical points reports zero.
    """
    pts = manifold._point(points)
    if pts.ndim != 2:
        raise ContractViolation("points must be a (k, rep_size) array")
    w = _weights(pts.shape[0], weights)
    mu = pts[0] if mu0 is None else manifold._point(mu0)
    tol = max(tol, ROUNDING_FLOOR * max(1.0, float(np.max(np.abs(pts)))))
    for it in range(max_iter + 1):
        step = w @ manifold.boxminus(pts, mu)
        res = math.sqrt(float(step @ step))
        if res <= tol:
            return MeanResult(mu, it, res) if full_output else mu
        if it == max_iter:
            break
        mu = manifold.boxplus(mu, step)
    raise MeanNotConverged(f"mean did not converge in {max_iter} iterations (residual {res:.3e})", mu, res)


def covariance_of_points(manifold, points, mean, weights=None):
    """``sum w_i (p_i [-] mean)(p_i [-] mean)^T``, symmetrized."""
    pts = manifold._point(points)
    w = _weights(pts.shape[0], weights)
    d = manifold.boxminus(pts, mean)
    return symmetrize((d * w[:, None]).T @ d)
