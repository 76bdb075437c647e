"""Vectorized numpy kernels for rotation primitives.

All functions take batched, C-contiguous float64 arrays with the batch on the
first axis.  Quaternions are stored scalar-first as ``(w, x, y, z)`` and 3x3
matrices as ``(k, 3, 3)``.
"""
import numpy as np

SMALL_ANGLE = 1e-4
TWO_PI = 2.0 * np.pi


def sinc(t):
    """sin(t)/t with a Taylor branch below ``SMALL_ANGLE``."""
    t = np.asarray(t, dtype=np.float64)
    small = np.abs(t) < SMALL_ANGLE
    t2 = t * t
    safe = np.where(small, 1.0, t)
    return np.where(small, 1.0 - t2 / 6.0 + t2 * t2 / 120.0, np.sin(safe) / safe)


def one_minus_cos_over_sq(t):
    """(1 - cos t)/t**2, evaluated as sinc(t/2)**2 / 2 away from zero."""
    t = np.asarray(t, dtype=np.float64)
    t2 = t * t
    half = sinc(0.5 * t)
    return np.where(np.abs(t) < SMALL_ANGLE, 0.5 - t2 / 24.0 + t2 * t2 / 720.0, 0.5 * half * half)


def nu_pi(d):
    d = np.asarray(d, dtype=np.float64)
    return d - TWO_PI * np.floor((d + np.pi) / TWO_PI)


def quat_mul(p, q):
    pw, px, py, pz = p[:, 0], p[:, 1], p[:, 2], p[:, 3]
    qw, qx, qy, qz = q[:, 0], q[:, 1], q[:, 2], q[:, 3]
    out = np.empty(np.broadcast_shapes(p.shape, q.shape))
    out[:, 0] = pw * qw - px * qx - py * qy - pz * qz
    out[:, 1] = pw * qx + px * qw + py * qz - pz * qy
    out[:, 2] = pw * qy - px * qz + py * qw + pz * qx
    out[:, 3] = pw * qz + px * qy - py * qx + pz * qw
    return out


def quat_conj(q):
    out = q.copy()
    out[:, 1:] *= -1.0
    return out


def quat_exp(v):
    theta = np.sqrt(np.einsum("ij,ij->i", v, v))
    out = np.empty((v.shape[0], 4))
    out[:, 0] = np.cos(theta)
    out[:, 1:] = sinc(theta)[:, None] * v
    return out


def quat_canonical(q):
    """Flip sign so that w > 0, or w == 0 and the first nonzero of v is positive."""
    lead = q[:, 0].copy()
    for j in range(1, 4):
        pending = lead == 0.0
        if not pending.any():
            break
        lead[pending] = q[pending, j]
    return np.where((lead < 0.0)[:, None], -q, q)


def quat_olog(q):
    q = quat_canonical(q)
    v = q[:, 1:]
    n = np.sqrt(np.einsum("ij,ij->i", v, v))
    safe = np.where(n > 0.0, n, 1.0)
    factor = np.where(n > 0.0, np.arctan2(n, q[:, 0]) / safe, 0.0)
    return factor[:, None] * v


def quat_normalize(q):
    return q / np.sqrt(np.einsum("ij,ij->i", q, q))[:, None]


def quat_boxplus(q, d):
    r = quat_mul(q, quat_exp(0.5 * d))
    return quat_canonical(quat_normalize(r))


def quat_boxminus(q, p):
    return 2.0 * quat_olog(quat_mul(quat_conj(p), q))


def quat_rotate(q, v):
    w = q[:, :1]
    u = q[:, 1:]
    t = 2.0 * np.cross(u, v)
    return v + w * t + np.cross(u, t)


def quat_to_matrix(q):
    w, x, y, z = q[:, 0], q[:, 1], q[:, 2], q[:, 3]
    out = np.empty((q.shape[0], 3, 3))
    out[:, 0, 0] = 1.0 - 2.0 * (y * y + z * z)
    out[:, 0, 1] = 2.0 * (x * y - w * z)
    out[:, 0, 2] = 2.0 * (x * z + w * y)
    out[:, 1, 0] = 2.0 * (x * y + w * z)
    out[:, 1, 1] = 1.0 - 2.0 * (x * x + z * z)
    out[:, 1, 2] = 2.0 * (y * z - w * x)
    out[:, 2, 0] = 2.0 * (x * z - w * y)
    out[:, 2, 1] = 2.0 * (y * z + w * x)
    out[:, 2, 2] = 1.0 - 2.0 * (x * x + y * y)
    return out


def matrix_to_quat(m):
    """Shepperd's method; returns canonical quaternions."""
    k = m.shape[0]
    diag = np.stack([m[:, 0, 0] + m[:, 1, 1] + m[:, 2, 2], m[:, 0, 0], m[:, 1, 1], m[:, 2, 2]], axis=1)
    pick = np.argmax(diag, axis=1)
    q = np.empty((k, 4))
    r01 = m[:, 0, 1] + m[:, 1, 0]
    r02 = m[:, 0, 2] + m[:, 2, 0]
    r12 = m[:, 1, 2] + m[:, 2, 1]
    s21 = m[:, 2, 1] - m[:, 1, 2]
    s02 = m[:, 0, 2] - m[:, 2, 0]
    s10 = m[:, 1, 0] - m[:, 0, 1]

    i = pick == 0
    w = 0.5 * np.sqrt(np.maximum(1.0 + diag[i, 0], 0.0))
    q[i] = np.stack([w, s21[i] / (4 * w), s02[i] / (4 * w), s10[i] / (4 * w)], axis=1)
    i = pick == 1
    x = 0.5 * np.sqrt(np.maximum(1.0 + m[i, 0, 0] - m[i, 1, 1] - m[i, 2, 2], 0.0))
    q[i] = np.stack([s21[i] / (4 * x), x, r01[i] / (4 * x), r02[i] / (4 * x)], axis=1)
    i = pick == 2
    y = 0.5 * np.sqrt(np.maximum(1.0 - m[i, 0, 0] + m[i, 1, 1] - m[i, 2, 2], 0.0))
    q[i] = np.stack([s02[i] / (4 * y), r01[i] / (4 * y), y, r12[i] / (4 * y)], axis=1)
    i = pick == 3
    z = 0.5 * np.sqrt(np.maximum(1.0 - m[i, 0, 0] - m[i, 1, 1] + m[i, 2, 2], 0.0))
    q[i] = np.stack([s10[i] / (4 * z), r02[i] / (4 * z), r12[i] / (4 * z), z], axis=1)
    return quat_canonical(quat_normalize(q))


def so3_exp(d):
    x, y, z = d[:, 0], d[:, 1], d[:, 2]
    theta = np.sqrt(x * x + y * y + z * z)
    ct = np.cos(theta)
    s = sinc(theta)
    c = one_minus_cos_over_sq(theta)
    out = np.empty((d.shape[0], 3, 3))
    out[:, 0, 0] = ct + c * x * x
    out[:, 0, 1] = -s * z + c * x * y
    out[:, 0, 2] = s * y + c * x * z
    out[:, 1, 0] = s * z + c * x * y
    out[:, 1, 1] = ct + c * y * y
    out[:, 1, 2] = -s * x + c * y * z
    out[:, 2, 0] = -s * y + c * x * z
    out[:, 2, 1] = s * x + c * y * z
    out[:, 2, 2] = ct + c * z * z
    return out


# cos(theta) below this routes the logarithm through the quaternion
NEAR_PI_COS = -0.9


def so3_log(m):
    w = np.stack([m[:, 2, 1] - m[:, 1, 2], m[:, 0, 2] - m[:, 2, 0], m[:, 1, 0] - m[:, 0, 1]], axis=1)
    cos_t = 0.5 * (m[:, 0, 0] + m[:, 1, 1] + m[:, 2, 2] - 1.0)
    sin_t = 0.5 * np.sqrt(np.einsum("ij,ij->i", w, w))
    theta = np.arctan2(sin_t, cos_t)
    out = (0.5 / sinc(theta))[:, None] * w
    near = cos_t < NEAR_PI_COS
    if near.any():
        out[near] = 2.0 * quat_olog(matrix_to_quat(m[near]))
    return out


KIND_EUCLIDEAN = 0
KIND_QUATERNION = 1


def compound_boxplus(x, d, kinds, roff, toff):
    """Boxplus for products of Euclidean and unit-quaternion blocks."""
    k = max(x.shape[0], d.shape[0])
    out = np.empty((k, x.shape[1]))
    for c, kind in enumerate(kinds):
        rs = slice(roff[c], roff[c + 1])
        ts = slice(toff[c], toff[c + 1])
        if kind == KIND_EUCLIDEAN:
            out[:, rs] = x[:, rs] + d[:, ts]
        else:
            out[:, rs] = quat_boxplus(x[:, rs], d[:, ts])
    return out


def compound_boxminus(y, x, kinds, roff, toff):
    k = max(y.shape[0], x.shape[0])
    out = np.empty((k, toff[len(kinds)]))
    for c, kind in enumerate(kinds):
        rs = slice(roff[c], roff[c + 1])
        ts = slice(toff[c], toff[c + 1])
        if kind == KIND_EUCLIDEAN:
            out[:, ts] = y[:, rs] - x[:, rs]
        else:
            out[:, ts] = quat_boxminus(y[:, rs], x[:, rs])
    return out
