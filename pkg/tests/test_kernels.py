"""The numba kernels against the vectorized numpy reference."""
import os
import subprocess
import sys

import numpy as np
import pytest

from boxplus._kernels import numpy_impl as ref

nb = pytest.importorskip("boxplus._kernels.numba_impl", exc_type=ImportError)


def unit(rng, k, n=4):
    v = rng.standard_normal((k, n))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


@pytest.fixture
def data():
    rng = np.random.default_rng(7)
    q = unit(rng, 300)
    p = unit(rng, 300)
    d = rng.uniform(-1, 1, (300, 3)) * 2.0
    d[:5] *= 1e-9
    v = rng.standard_normal((300, 3))
    return q, p, d, v


def test_quaternion_kernels_agree(data):
    q, p, d, v = data
    np.testing.assert_allclose(nb.quat_mul(q, p), ref.quat_mul(q, p), atol=1e-15)
    np.testing.assert_allclose(nb.quat_olog(q), ref.quat_olog(q), atol=1e-15)
    np.testing.assert_allclose(nb.quat_boxplus(q, d), ref.quat_boxplus(q, d), atol=1e-15)
    np.testing.assert_allclose(nb.quat_boxminus(q, p), ref.quat_boxminus(q, p), atol=1e-14)
    np.testing.assert_allclose(nb.quat_rotate(q, v), ref.quat_rotate(q, v), atol=1e-14)
    np.testing.assert_allclose(nb.quat_to_matrix(q), ref.quat_to_matrix(q), atol=1e-15)


def test_broadcast_leading_one(data):
    q, p, d, v = data
    np.testing.assert_allclose(nb.quat_boxplus(q[:1], d), ref.quat_boxplus(np.repeat(q[:1], 300, 0), d),
                               atol=1e-15)
    np.testing.assert_allclose(nb.quat_rotate(q, v[:1]), ref.quat_rotate(q, np.repeat(v[:1], 300, 0)),
                               atol=1e-14)


def test_so3_kernels_agree(data):
    q, p, d, v = data
    m = ref.so3_exp(d * 1.5)
    np.testing.assert_allclose(nb.so3_exp(d * 1.5), m, atol=1e-15)
    np.testing.assert_allclose(nb.so3_log(m), ref.so3_log(m), atol=1e-13)
    mats = ref.quat_to_matrix(q)
    back_nb, back_ref = nb.matrix_to_quat(mats), ref.matrix_to_quat(mats)
    np.testing.assert_allclose(np.abs(np.sum(back_nb * back_ref, axis=1)), 1.0, atol=1e-14)


def test_nu_pi_agrees():
    x = np.linspace(-40, 40, 1001)
    np.testing.assert_allclose(nb.nu_pi(x), ref.nu_pi(x), atol=1e-14)


def test_compound_kernels_agree(data):
    q, p, d, v = data
    kinds = np.array([0, 1, 0], dtype=np.int64)
    roff = np.array([0, 3, 7, 10], dtype=np.int64)
    toff = np.array([0, 3, 6, 9], dtype=np.int64)
    x = np.concatenate([v, q, v * 2], axis=1)
    y = np.concatenate([-v, p, v], axis=1)
    delta = np.concatenate([v, d, d], axis=1)
    np.testing.assert_allclose(nb.compound_boxplus(x, delta, kinds, roff, toff),
                               ref.compound_boxplus(x, delta, kinds, roff, toff), atol=1e-15)
    np.testing.assert_allclose(nb.compound_boxminus(y, x, kinds, roff, toff),
                               ref.compound_boxminus(y, x, kinds, roff, toff), atol=1e-14)


def test_env_flag_selects_numpy():
    code = "import boxplus; print(boxplus.BACKEND)"
    env = dict(os.environ, BOXPLUS_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
