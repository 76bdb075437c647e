"""Loop kernels compiled with numba; same contracts as ``numpy_impl``.

Batch arguments may have a leading dimension of 1, which broadcasts against
the other operand.
"""
import math

import numpy as np
from numba import njit

SMALL_ANGLE = 1e-4
TWO_PI = 2.0 * math.pi
NEAR_PI_COS = -0.9

_jit = njit(cache=True, fastmath=False, nogil=True)


@_jit
def _sinc(t):
    if abs(t) < SMALL_ANGLE:
        t2 = t * t
        return 1.0 - t2 / 6.0 + t2 * t2 / 120.0
    return math.sin(t) / t


@_jit
def _omc(t):
    if abs(t) < SMALL_ANGLE:
        t2 = t * t
        return 0.5 - t2 / 24.0 + t2 * t2 / 720.0
    h = _sinc(0.5 * t)
    return 0.5 * h * h


@_jit
def nu_pi(d):
    out = np.empty_like(d)
    for i in range(d.size):
        out.flat[i] = d.flat[i] - TWO_PI * math.floor((d.flat[i] + math.pi) / TWO_PI)
    return out


@_jit
def _mul(pw, px, py, pz, qw, qx, qy, qz):
    return (
        pw * qw - px * qx - py * qy - pz * qz,
        pw * qx + px * qw + py * qz - pz * qy,
        pw * qy - px * qz + py * qw + pz * qx,
        pw * qz + px * qy - py * qx + pz * qw,
    )


@_jit
def _needs_flip(w, x, y, z):
    if w != 0.0:
        return w < 0.0
    if x != 0.0:
        return x < 0.0
    if y != 0.0:
        return y < 0.0
    return z < 0.0


@_jit
def _olog(w, x, y, z):
    if _needs_flip(w, x, y, z):
        w, x, y, z = -w, -x, -y, -z
    n = math.sqrt(x * x + y * y + z * z)
    if n == 0.0:
        return 0.0, 0.0, 0.0
    f = math.atan2(n, w) / n
    return f * x, f * y, f * z


@_jit
def quat_mul(p, q):
    k = max(p.shape[0], q.shape[0])
    out = np.empty((k, 4))
    for i in range(k):
        a = p[i if p.shape[0] > 1 else 0]
        b = q[i if q.shape[0] > 1 else 0]
        out[i, 0], out[i, 1], out[i, 2], out[i, 3] = _mul(a[0], a[1], a[2], a[3], b[0], b[1], b[2], b[3])
    return out


@_jit
def quat_olog(q):
    out = np.empty((q.shape[0], 3))
    for i in range(q.shape[0]):
        out[i, 0], out[i, 1], out[i, 2] = _olog(q[i, 0], q[i, 1], q[i, 2], q[i, 3])
    return out


@_jit
def _qbp(a0, a1, a2, a3, v0, v1, v2):
    hx, hy, hz = 0.5 * v0, 0.5 * v1, 0.5 * v2
    th = math.sqrt(hx * hx + hy * hy + hz * hz)
    s = _sinc(th)
    w, x, y, z = _mul(a0, a1, a2, a3, math.cos(th), s * hx, s * hy, s * hz)
    n = math.sqrt(w * w + x * x + y * y + z * z)
    if _needs_flip(w, x, y, z):
        n = -n
    return w / n, x / n, y / n, z / n


@_jit
def _qbm(a0, a1, a2, a3, b0, b1, b2, b3):
    w, x, y, z = _mul(b0, -b1, -b2, -b3, a0, a1, a2, a3)
    lx, ly, lz = _olog(w, x, y, z)
    return 2.0 * lx, 2.0 * ly, 2.0 * lz


@_jit
def quat_boxplus(q, d):
    k = max(q.shape[0], d.shape[0])
    out = np.empty((k, 4))
    for i in range(k):
        a = q[i if q.shape[0] > 1 else 0]
        v = d[i if d.shape[0] > 1 else 0]
        out[i, 0], out[i, 1], out[i, 2], out[i, 3] = _qbp(a[0], a[1], a[2], a[3], v[0], v[1], v[2])
    return out


@_jit
def quat_boxminus(q, p):
    k = max(q.shape[0], p.shape[0])
    out = np.empty((k, 3))
    for i in range(k):
        a = q[i if q.shape[0] > 1 else 0]
        b = p[i if p.shape[0] > 1 else 0]
        out[i, 0], out[i, 1], out[i, 2] = _qbm(a[0], a[1], a[2], a[3], b[0], b[1], b[2], b[3])
    return out


# component kinds understood by the fused compound kernels
KIND_EUCLIDEAN = 0
KIND_QUATERNION = 1


@_jit
def compound_boxplus(x, d, kinds, roff, toff):
    """Boxplus for products of Euclidean and unit-quaternion blocks."""
    k = max(x.shape[0], d.shape[0])
    out = np.empty((k, x.shape[1]))
    for i in range(k):
        xi = x[i if x.shape[0] > 1 else 0]
        di = d[i if d.shape[0] > 1 else 0]
        for c in range(kinds.shape[0]):
            r0 = roff[c]
            t0 = toff[c]
            if kinds[c] == KIND_EUCLIDEAN:
                for j in range(roff[c + 1] - r0):
                    out[i, r0 + j] = xi[r0 + j] + di[t0 + j]
            else:
                out[i, r0], out[i, r0 + 1], out[i, r0 + 2], out[i, r0 + 3] = _qbp(
                    xi[r0], xi[r0 + 1], xi[r0 + 2], xi[r0 + 3], di[t0], di[t0 + 1], di[t0 + 2])
    return out


@_jit
def compound_boxminus(y, x, kinds, roff, toff):
    k = max(y.shape[0], x.shape[0])
    out = np.empty((k, toff[kinds.shape[0]]))
    for i in range(k):
        yi = y[i if y.shape[0] > 1 else 0]
        xi = x[i if x.shape[0] > 1 else 0]
        for c in range(kinds.shape[0]):
            r0 = roff[c]
            t0 = toff[c]
            if kinds[c] == KIND_EUCLIDEAN:
                for j in range(roff[c + 1] - r0):
                    out[i, t0 + j] = yi[r0 + j] - xi[r0 + j]
            else:
                out[i, t0], out[i, t0 + 1], out[i, t0 + 2] = _qbm(
                    yi[r0], yi[r0 + 1], yi[r0 + 2], yi[r0 + 3], xi[r0], xi[r0 + 1], xi[r0 + 2], xi[r0 + 3])
    return out


@_jit
def quat_rotate(q, v):
    k = max(q.shape[0], v.shape[0])
    out = np.empty((k, 3))
    for i in range(k):
        a = q[i if q.shape[0] > 1 else 0]
        b = v[i if v.shape[0] > 1 else 0]
        w, ux, uy, uz = a[0], a[1], a[2], a[3]
        tx = 2.0 * (uy * b[2] - uz * b[1])
        ty = 2.0 * (uz * b[0] - ux * b[2])
        tz = 2.0 * (ux * b[1] - uy * b[0])
        out[i, 0] = b[0] + w * tx + (uy * tz - uz * ty)
        out[i, 1] = b[1] + w * ty + (uz * tx - ux * tz)
        out[i, 2] = b[2] + w * tz + (ux * ty - uy * tx)
    return out


@_jit
def quat_to_matrix(q):
    out = np.empty((q.shape[0], 3, 3))
    for i in range(q.shape[0]):
        w, x, y, z = q[i, 0], q[i, 1], q[i, 2], q[i, 3]
        out[i, 0, 0] = 1.0 - 2.0 * (y * y + z * z)
        out[i, 0, 1] = 2.0 * (x * y - w * z)
        out[i, 0, 2] = 2.0 * (x * z + w * y)
        out[i, 1, 0] = 2.0 * (x * y + w * z)
        out[i, 1, 1] = 1.0 - 2.0 * (x * x + z * z)
        out[i, 1, 2] = 2.0 * (y * z - w * x)
        out[i, 2, 0] = 2.0 * (x * z - w * y)
        out[i, 2, 1] = 2.0 * (y * z + w * x)
        out[i, 2, 2] = 1.0 - 2.0 * (x * x + y * y)
    return out


@_jit
def _matrix_to_quat(m):
    tr = m[0, 0] + m[1, 1] + m[2, 2]
    if tr >= m[0, 0] and tr >= m[1, 1] and tr >= m[2, 2]:
        w = 0.5 * math.sqrt(max(1.0 + tr, 0.0))
        f = 0.25 / w
        q = (w, (m[2, 1] - m[1, 2]) * f, (m[0, 2] - m[2, 0]) * f, (m[1, 0] - m[0, 1]) * f)
    elif m[0, 0] >= m[1, 1] and m[0, 0] >= m[2, 2]:
        x = 0.5 * math.sqrt(max(1.0 + m[0, 0] - m[1, 1] - m[2, 2], 0.0))
        f = 0.25 / x
        q = ((m[2, 1] - m[1, 2]) * f, x, (m[0, 1] + m[1, 0]) * f, (m[0, 2] + m[2, 0]) * f)
    elif m[1, 1] >= m[2, 2]:
        y = 0.5 * math.sqrt(max(1.0 - m[0, 0] + m[1, 1] - m[2, 2], 0.0))
        f = 0.25 / y
        q = ((m[0, 2] - m[2, 0]) * f, (m[0, 1] + m[1, 0]) * f, y, (m[1, 2] + m[2, 1]) * f)
    else:
        z = 0.5 * math.sqrt(max(1.0 - m[0, 0] - m[1, 1] + m[2, 2], 0.0))
        f = 0.25 / z
        q = ((m[1, 0] - m[0, 1]) * f, (m[0, 2] + m[2, 0]) * f, (m[1, 2] + m[2, 1]) * f, z)
    n = math.sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3])
    if _needs_flip(q[0], q[1], q[2], q[3]):
        n = -n
    return q[0] / n, q[1] / n, q[2] / n, q[3] / n


@_jit
def matrix_to_quat(m):
    out = np.empty((m.shape[0], 4))
    for i in range(m.shape[0]):
        out[i, 0], out[i, 1], out[i, 2], out[i, 3] = _matrix_to_quat(m[i])
    return out


@_jit
def so3_exp(d):
    out = np.empty((d.shape[0], 3, 3))
    for i in range(d.shape[0]):
        x, y, z = d[i, 0], d[i, 1], d[i, 2]
        th = math.sqrt(x * x + y * y + z * z)
        ct = math.cos(th)
        s = _sinc(th)
        c = _omc(th)
        out[i, 0, 0] = ct + c * x * x
        out[i, 0, 1] = -s * z + c * x * y
        out[i, 0, 2] = s * y + c * x * z
        out[i, 1, 0] = s * z + c * x * y
        out[i, 1, 1] = ct + c * y * y
        out[i, 1, 2] = -s * x + c * y * z
        out[i, 2, 0] = -s * y + c * x * z
        out[i, 2, 1] = s * x + c * y * z
        out[i, 2, 2] = ct + c * z * z
    return out


@_jit
def so3_log(m):
    out = np.empty((m.shape[0], 3))
    for i in range(m.shape[0]):
        r = m[i]
        wx = r[2, 1] - r[1, 2]
        wy = r[0, 2] - r[2, 0]
        wz = r[1, 0] - r[0, 1]
        cos_t = 0.5 * (r[0, 0] + r[1, 1] + r[2, 2] - 1.0)
        if cos_t < NEAR_PI_COS:
            qw, qx, qy, qz = _matrix_to_quat(r)
            lx, ly, lz = _olog(qw, qx, qy, qz)
            out[i, 0] = 2.0 * lx
            out[i, 1] = 2.0 * ly
            out[i, 2] = 2.0 * lz
        else:
            sin_t = 0.5 * math.sqrt(wx * wx + wy * wy + wz * wz)
            f = 0.5 / _sinc(math.atan2(sin_t, cos_t))
            out[i, 0] = f * wx
            out[i, 1] = f * wy
            out[i, 2] = f * wz
    return out
