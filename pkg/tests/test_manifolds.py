import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from boxplus.errors import ContractViolation
from boxplus.manifolds import (
    Angle, Compound, Euclidean, ProjectivePlane, RotMatrix2, RotMatrix3, UnitComplex, UnitQuaternion, UnitSphere,
    UnitSphere2, exp_quat, exp_sn, exp_so3, householder_rx, log_sn, log_so3, nu_pi, olog_quat, quat_to_rotmatrix,
    rotmatrix_to_quat, sphere2_rx,
)
from boxplus.axioms import random_tangent

from conftest import MANIFOLD_PARAMS

RX90 = np.array([[1.0, 0, 0], [0, 0, -1], [0, 1, 0]])


def rand_unit(rng, n, k=None):
    v = rng.standard_normal((k or 1, n))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v if k else v[0]


@pytest.mark.parametrize("x,want", [(0.0, 0.0), (math.pi, -math.pi), (-math.pi, -math.pi),
                                    (-6.0, -6.0 + 2 * math.pi), (7.0, 7.0 - 2 * math.pi)])
def test_nu_pi(x, want):
    assert nu_pi(x) == pytest.approx(want, abs=1e-15)


@given(st.floats(-1e6, 1e6))
def test_nu_pi_range_and_congruence(x):
    y = nu_pi(x)
    assert -math.pi <= y < math.pi
    k = (x - y) / (2 * math.pi)
    assert abs(k - round(k)) < 1e-6


def test_euclidean_boxplus_example():
    assert Euclidean(2).boxplus([1.0, 2.0], [0.5, -1.0]).tolist() == [1.5, 1.0]


def test_angle_boxminus_example():
    assert Angle().boxminus([-3.0], [3.0])[0] == pytest.approx(-6 + 2 * math.pi, abs=1e-12)


def test_exp_log_so3_examples():
    np.testing.assert_allclose(exp_so3(np.zeros(3)), np.eye(3), atol=0)
    np.testing.assert_allclose(exp_so3([math.pi / 2, 0, 0]), RX90, atol=1e-15)
    np.testing.assert_allclose(log_so3(np.eye(3)), np.zeros(3), atol=0)
    np.testing.assert_allclose(log_so3(RX90), [math.pi / 2, 0, 0], atol=1e-14)


def test_log_so3_near_pi(rng):
    axis = rand_unit(rng, 3)
    theta = math.pi - 1e-7
    np.testing.assert_allclose(log_so3(exp_so3(axis * theta)), axis * theta, atol=1e-5)


def test_log_so3_at_pi_sign_is_deterministic():
    # exactly symmetric half-turn matrices: the axis sign is fixed positive
    for diag, want in (([-1.0, -1, 1], [0, 0, math.pi]), ([1.0, -1, -1], [math.pi, 0, 0])):
        np.testing.assert_allclose(log_so3(np.diag(diag)), want, atol=1e-12)
    a = np.array([1.0, -2.0, 2.0]) / 3.0
    half_turn = 2.0 * np.outer(a, a) - np.eye(3)
    np.testing.assert_allclose(log_so3(half_turn), a * math.pi, atol=1e-12)


def test_so3_roundtrip(rng):
    d = random_tangent(RotMatrix3(), rng, 500)
    np.testing.assert_allclose(log_so3(exp_so3(d)), d, atol=1e-9)


def test_small_angle_series(rng):
    d = 1e-9 * rand_unit(rng, 3)
    np.testing.assert_allclose(log_so3(exp_so3(d)), d, rtol=1e-6, atol=1e-20)
    np.testing.assert_allclose(olog_quat(exp_quat(d)), d, rtol=1e-6, atol=1e-20)


def test_quaternion_examples():
    np.testing.assert_allclose(exp_quat(np.zeros(3)), [1, 0, 0, 0])
    np.testing.assert_allclose(exp_quat([math.pi / 2, 0, 0]), [0, 1, 0, 0], atol=1e-16)
    np.testing.assert_allclose(olog_quat([1.0, 0, 0, 0]), np.zeros(3))
    np.testing.assert_allclose(olog_quat([0.0, 1, 0, 0]), [math.pi / 2, 0, 0])
    np.testing.assert_allclose(olog_quat([0.0, -1, 0, 0]), [math.pi / 2, 0, 0])
    np.testing.assert_allclose(quat_to_rotmatrix([1.0, 0, 0, 0]), np.eye(3))
    np.testing.assert_allclose(quat_to_rotmatrix([0.0, 1, 0, 0]), np.diag([1.0, -1, -1]))


def test_olog_sign_invariant(rng):
    q = rand_unit(rng, 4, 200)
    assert np.array_equal(olog_quat(q), olog_quat(-q))


def test_phi_is_quadratic_and_covers(rng):
    q = rand_unit(rng, 4, 200)
    np.testing.assert_allclose(quat_to_rotmatrix(q), quat_to_rotmatrix(-q), atol=1e-15)
    d = random_tangent(RotMatrix3(), rng, 200)
    np.testing.assert_allclose(quat_to_rotmatrix(exp_quat(d / 2)), exp_so3(d), atol=1e-12)
    back = rotmatrix_to_quat(quat_to_rotmatrix(q))
    assert np.all(np.minimum(np.linalg.norm(back - q, axis=1), np.linalg.norm(back + q, axis=1)) < 1e-12)


def test_sphere_exp_log_examples():
    np.testing.assert_allclose(exp_sn(np.zeros(2)), [1, 0, 0])
    np.testing.assert_allclose(exp_sn([math.pi, 0]), [-1, 0, 0], atol=1e-15)
    np.testing.assert_allclose(log_sn([1.0, 0, 0]), [0, 0])
    np.testing.assert_allclose(log_sn([0.0, 1, 0]), [math.pi / 2, 0])
    np.testing.assert_allclose(log_sn([-1.0, 0, 0]), [math.pi, 0])
    np.testing.assert_allclose(UnitSphere2().boxplus([1.0, 0, 0], [math.pi / 2, 0]), [0, 1, 0], atol=1e-15)


def test_sphere_log_left_inverse(rng):
    d = random_tangent(UnitSphere(4), rng, 300)
    np.testing.assert_allclose(log_sn(exp_sn(d)), d, atol=1e-9)


@pytest.mark.parametrize("n", [1, 2, 4, 7])
def test_householder_rx(rng, n):
    np.testing.assert_array_equal(householder_rx(np.eye(n + 1)[0]), np.eye(n + 1))
    for x in rand_unit(rng, n + 1, 50):
        R = householder_rx(x)
        np.testing.assert_allclose(R[:, 0], x, atol=1e-12)
        np.testing.assert_allclose(R.T @ R, np.eye(n + 1), atol=1e-12)
        assert np.linalg.det(R) == pytest.approx(1.0, abs=1e-12)


def test_sphere2_rx(rng):
    for x in rand_unit(rng, 3, 50):
        R = sphere2_rx(x)
        np.testing.assert_allclose(R[:, 0], x, atol=1e-12)
        np.testing.assert_allclose(R.T @ R, np.eye(3), atol=1e-12)
        assert np.linalg.det(R) == pytest.approx(1.0, abs=1e-12)


def test_sphere2_geodesic(rng):
    m = UnitSphere2()
    x = m.random(rng, 300)
    d = random_tangent(m, rng, 300)
    np.testing.assert_allclose(m.distance(x, m.boxplus(x, d)), np.linalg.norm(d, axis=1), atol=1e-9)


def test_antipodal_inputs_do_not_crash():
    s = UnitSphere2()
    assert np.linalg.norm(s.boxminus([-1.0, 0, 0], [1.0, 0, 0])) == pytest.approx(math.pi)
    r = RotMatrix3()
    y = exp_so3([0, math.pi, 0]).ravel()
    assert np.linalg.norm(r.boxminus(y, np.eye(3).ravel())) == pytest.approx(math.pi, abs=1e-9)
    q = UnitQuaternion()
    assert np.linalg.norm(q.boxminus([0.0, 0, 0, 1], [1.0, 0, 0, 0])) == pytest.approx(math.pi)


def test_quaternion_canonical_after_boxplus(rng):
    q = UnitQuaternion()
    out = q.boxplus(q.random(rng, 100), random_tangent(q, rng, 100))
    assert np.all(out[:, 0] >= 0)
    np.testing.assert_allclose(np.linalg.norm(out, axis=1), 1.0, atol=1e-15)


def test_quaternion_ops_sign_invariant(rng):
    q = UnitQuaternion()
    a, b = q.random(rng, 50), q.random(rng, 50)
    d = random_tangent(q, rng, 50)
    np.testing.assert_allclose(q.boxminus(-a, b), q.boxminus(a, b), atol=1e-12)
    np.testing.assert_allclose(q.boxminus(a, -b), q.boxminus(a, b), atol=1e-12)
    assert q.equal(q.boxplus(-a, d), q.boxplus(a, d))


def test_projective_sign_invariant(rng):
    p = ProjectivePlane()
    a, b = p.random(rng, 50), p.random(rng, 50)
    np.testing.assert_allclose(p.boxminus(-a, b), p.boxminus(a, b), atol=1e-12)
    np.testing.assert_allclose(p.boxminus(a, -b), p.boxminus(a, b), atol=1e-12)
    assert p.v_radius == pytest.approx(math.pi / 2)


def test_rotation_matrix_drift_repaired(rng):
    r = RotMatrix3()
    x = r.identity()
    for d in random_tangent(r, rng, 2000) * 0.1:
        x = r.boxplus(x, d)
    M = x.reshape(3, 3)
    np.testing.assert_allclose(M.T @ M, np.eye(3), atol=1e-12)
    assert np.linalg.det(M) == pytest.approx(1.0, abs=1e-12)


def test_v_radius_values():
    assert Euclidean(3).v_radius == math.inf
    for m in (Angle(), RotMatrix2(), UnitComplex(), RotMatrix3(), UnitQuaternion(), UnitSphere(4)):
        assert m.v_radius == pytest.approx(math.pi)
    c = Compound([("a", Euclidean(2)), ("b", ProjectivePlane()), ("c", Angle())])
    assert c.v_radius == pytest.approx(math.pi / 2)


def test_compound_layout_and_routing(rng):
    c = Compound([("pos", Euclidean(3)), ("rot", RotMatrix3()), ("vel", Euclidean(3))])
    assert c.offsets.tolist() == [0, 3, 6, 9] and c.dof == 9
    x = c.random(rng)
    assert np.array_equal(c.boxplus(x, np.zeros(9)), x)
    d = np.zeros(9)
    d[3:6] = [0.1, -0.2, 0.3]
    y = c.boxplus(x, d)
    assert np.array_equal(c.get(y, "pos"), c.get(x, "pos"))
    assert np.array_equal(c.get(y, "vel"), c.get(x, "vel"))
    assert not np.allclose(c.get(y, "rot"), c.get(x, "rot"))


def test_compound_matches_components(rng):
    parts = [("a", UnitQuaternion()), ("b", UnitSphere2()), ("c", Angle())]
    c = Compound(parts)
    x, y = c.random(rng, 20), c.random(rng, 20)
    got = c.boxminus(y, x)
    for k, (name, m) in enumerate(parts):
        s, r = c.tangent_slice(name), c.rep_slice(name)
        np.testing.assert_allclose(got[:, s], m.boxminus(y[:, r], x[:, r]), atol=1e-15)


def test_compound_errors():
    with pytest.raises(ContractViolation):
        Compound([])
    with pytest.raises(ContractViolation):
        Compound([("a", Angle()), ("a", Angle())])
    c = Compound([("a", Angle()), ("b", Euclidean(2))])
    with pytest.raises(ContractViolation):
        c.boxplus(np.zeros(3), np.zeros(2))


def test_dimension_mismatch_raises():
    with pytest.raises(ContractViolation):
        RotMatrix3().boxplus(np.eye(3).ravel(), np.zeros(2))
    with pytest.raises(ContractViolation):
        UnitQuaternion().boxminus(np.zeros(3), np.array([1.0, 0, 0, 0]))


def test_scale_minus_one(rng):
    q = UnitQuaternion()
    x = q.random(rng)
    d = random_tangent(q, rng, 1)[0]
    assert q.equal(q.boxplus(x, d, scale=-1.0), q.boxplus(x, -d))


@MANIFOLD_PARAMS
def test_boxplus_jacobian_full_rank(name, m, rng):
    x = m.random(rng)
    eps = 1e-6
    cols = []
    for k in range(m.dof):
        e = np.zeros(m.dof)
        e[k] = eps
        cols.append((m.boxplus(x, e) - m.boxplus(x, -e)) / (2 * eps))
    assert np.linalg.matrix_rank(np.array(cols).T, tol=1e-6) == m.dof


@MANIFOLD_PARAMS
def test_batch_equals_loop(name, m, rng):
    x, y = m.random(rng, 5), m.random(rng, 5)
    batch = m.boxminus(y, x)
    for k in range(5):
        np.testing.assert_allclose(m.boxminus(y[k], x[k]), batch[k], atol=1e-14)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, 3, elements=st.floats(-3.0, 3.0)), arrays(np.float64, 4, elements=st.floats(-1, 1)))
def test_quaternion_axiom_4c_property(d, raw):
    q = UnitQuaternion()
    n = np.linalg.norm(raw)
    x = raw / n if n > 1e-3 else q.identity()
    if np.linalg.norm(d) >= math.pi:
        d = d * (3.1 / np.linalg.norm(d))
    np.testing.assert_allclose(q.boxminus(q.boxplus(x, d), x), d, atol=1e-9)


@settings(max_examples=50, deadline=None)
@given(st.floats(-50, 50), st.floats(-50, 50))
def test_angle_axiom_4b_property(a, b):
    m = Angle()
    assert m.distance(m.boxplus([a], m.boxminus([b], [a])), [b]) < 1e-9
