import math

import numpy as np
import pytest

from boxplus.axioms import random_tangent
from boxplus.errors import ChartExceeded, ContractViolation, CovarianceNotPD, MeanNotConverged
from boxplus.manifolds import Angle, Euclidean, RotMatrix3, UnitQuaternion, quat_to_rotmatrix
from boxplus.stats import (
    ManifoldGaussian, cholesky_sqrt, covariance_of_points, mean_of_points, sample,
)

from conftest import MANIFOLD_PARAMS


def test_cholesky_examples(rng):
    np.testing.assert_array_equal(cholesky_sqrt(np.eye(3)), np.eye(3))
    np.testing.assert_allclose(cholesky_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))
    M = rng.standard_normal((5, 5))
    A = M @ M.T
    L = cholesky_sqrt(A)
    assert np.linalg.norm(L @ L.T - A) <= 1e-9 * (1 + np.linalg.norm(A))
    np.testing.assert_array_equal(cholesky_sqrt(np.zeros((2, 2))), np.zeros((2, 2)))


def test_cholesky_jitter_and_failure():
    L = cholesky_sqrt(np.array([[1.0, 1.0], [1.0, 1.0]]))
    np.testing.assert_allclose(L @ L.T, np.ones((2, 2)), atol=1e-9)
    with pytest.raises(CovarianceNotPD, match="covariance not PD"):
        cholesky_sqrt(np.diag([1.0, -1.0]))


def test_sample_zero_cov_returns_mean(rng):
    q = UnitQuaternion()
    mu = q.random(rng)
    np.testing.assert_array_equal(sample(ManifoldGaussian(q, mu, np.zeros((3, 3))), rng), mu)


def test_sample_euclidean_mean(rng):
    mu = np.array([1.0, -2.0])
    x = sample(ManifoldGaussian(Euclidean(2), mu, np.eye(2)), rng, size=100_000)
    assert np.all(np.abs(x.mean(axis=0) - mu) < 4.0 / math.sqrt(len(x)))


def test_sample_angle_within_chart(rng):
    a = Angle()
    x = sample(ManifoldGaussian(a, [3.0], [[0.09]]), rng, size=5000)
    assert np.all(a.distance(x, [3.0]) < math.pi)


def test_sample_chart_exceeded(rng):
    with pytest.raises(ChartExceeded, match="distribution exceeds chart"):
        sample(ManifoldGaussian(Angle(), [0.0], [[1e8]]), rng)


def test_gaussian_shape_checks():
    with pytest.raises(ContractViolation):
        ManifoldGaussian(Euclidean(2), np.zeros(2), np.eye(3))


def test_mean_identical_points():
    q = UnitQuaternion()
    pts = np.repeat(q.identity()[None], 5, axis=0)
    res = mean_of_points(q, pts, full_output=True)
    np.testing.assert_array_equal(res.mean, q.identity())
    assert res.iterations == 0


def test_mean_euclidean_closed_form(rng):
    pts = rng.standard_normal((7, 3))
    w = rng.uniform(size=7)
    w /= w.sum()
    res = mean_of_points(Euclidean(3), pts, weights=w, full_output=True)
    np.testing.assert_allclose(res.mean, w @ pts, atol=1e-12)
    assert res.iterations == 1


def test_mean_antipodal_angles():
    mu = mean_of_points(Angle(), np.array([[3.0], [-3.0]]), mu0=[3.0])
    assert abs(abs(Angle().normalize(mu)[0]) - math.pi) < 1e-9


def test_mean_not_converged_carries_state():
    pts = np.array([[0.0], [2.0]])
    with pytest.raises(MeanNotConverged) as info:
        mean_of_points(Angle(), pts, max_iter=0)
    assert info.value.last is not None and info.value.residual > 0


def test_weights_checked():
    with pytest.raises(ContractViolation):
        mean_of_points(Euclidean(1), np.zeros((2, 1)), weights=[0.3, 0.3])


def test_covariance_examples():
    e = Euclidean(3)
    np.testing.assert_array_equal(covariance_of_points(e, np.zeros((1, 3)), np.zeros(3)), np.zeros((3, 3)))
    pts = np.array([[1.0, 0, 0], [-1.0, 0, 0]])
    np.testing.assert_allclose(covariance_of_points(e, pts, np.zeros(3)), np.diag([1.0, 0, 0]))


@MANIFOLD_PARAMS
def test_covariance_trace_is_mean_square_distance(name, m, rng):
    pts = m.random(rng, 10)
    mu = pts[0]
    C = covariance_of_points(m, pts, mu)
    assert np.trace(C) == pytest.approx(np.mean(m.distance(pts, mu) ** 2), rel=1e-12)


@MANIFOLD_PARAMS
def test_sampling_consistency(name, m, rng):
    sigma = 0.1
    cov = sigma ** 2 * np.eye(m.dof)
    mu = m.random(rng)
    pts = sample(ManifoldGaussian(m, mu, cov), rng, size=10_000)
    est = mean_of_points(m, pts, mu0=mu)
    assert m.distance(est, mu) < 5 * sigma / math.sqrt(len(pts))
    C = covariance_of_points(m, pts, est)
    assert np.all(np.abs(C - cov) <= 0.15 * sigma ** 2)


def test_mean_equivariant_under_phi(rng):
    q, r = UnitQuaternion(), RotMatrix3()
    mu = q.random(rng)
    pts = q.boxplus(mu, 0.3 * random_tangent(q, rng, 9))
    mq = mean_of_points(q, pts)
    mr = mean_of_points(r, quat_to_rotmatrix(pts).reshape(-1, 9))
    assert r.distance(quat_to_rotmatrix(mq).ravel(), mr) < 1e-8
