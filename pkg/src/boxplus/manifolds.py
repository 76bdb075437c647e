"""Concrete manifolds with boxplus / boxminus encapsulation.

Points are plain float64 arrays whose last axis holds the stored
representation (``rep_size`` numbers).  Tangent perturbations are arrays whose
last axis has length ``dof``.  Every operation broadcasts over leading axes, so
a batch of sigma points is just a ``(k, rep_size)`` array.

Manifold objects hold no per-point state and can be shared freely.
"""
from __future__ import annotations

import math

import numpy as np

from . import _kernels as K
from .errors import ContractViolation

__all__ = [
    "Manifold", "Euclidean", "Angle", "RotMatrix2", "UnitComplex", "RotMatrix3",
    "UnitQuaternion", "UnitSphere", "UnitSphere2", "ProjectivePlane", "Compound",
    "nu_pi", "exp_so3", "log_so3", "exp_quat", "olog_quat", "exp_sn", "log_sn",
    "householder_rx", "sphere2_rx", "quat_to_rotmatrix", "rotmatrix_to_quat",
    "angle_to_complex", "complex_to_rot2", "rot2_to_angle",
]

_c = np.ascontiguousarray
# polar re-projection threshold for stored rotation matrices
ORTHO_DRIFT = 1e-12


def _lift(fn, a, tail_in, tail_out):
    """Apply a (k, *tail_in) -> (k, *tail_out) kernel to any leading shape."""
    a = np.asarray(a, dtype=np.float64)
    lead = a.shape[: a.ndim - len(tail_in)]
    if a.shape[a.ndim - len(tail_in):] != tail_in:
        raise ContractViolation(f"expected trailing shape {tail_in}, got {a.shape}")
    out = fn(_c(a.reshape((-1,) + tail_in)))
    return out.reshape(lead + tail_out)


# ---------------------------------------------------------------------------
# free-standing primitive maps


def nu_pi(delta):
    """Wrap an angle difference into [-pi, pi)."""
    d = np.asarray(delta, dtype=np.float64)
    out = K.numpy_impl.nu_pi(d)
    return float(out) if out.ndim == 0 else out


def exp_so3(delta):
    """Rodrigues map from a rotation vector to a 3x3 rotation matrix."""
    return _lift(K.so3_exp, delta, (3,), (3, 3))


def log_so3(m):
    """Inverse of :func:`exp_so3`; returns a rotation vector with norm <= pi."""
    return _lift(K.so3_log, m, (3, 3), (3,))


def exp_quat(v):
    """``(cos|v|, sinc|v| v)``, a unit quaternion stored as (w, x, y, z)."""
    return _lift(K.quat_exp, v, (3,), (4,))


def olog_quat(q):
    """Sign-invariant quaternion logarithm, norm at most pi/2."""
    return _lift(K.quat_olog, q, (4,), (3,))


def quat_to_rotmatrix(q):
    return _lift(K.quat_to_matrix, q, (4,), (3, 3))


def rotmatrix_to_quat(m):
    """Canonical (w >= 0) quaternion of a rotation matrix."""
    return _lift(K.matrix_to_quat, m, (3, 3), (4,))


def _exp_sn(d):
    th = np.sqrt(np.einsum("ij,ij->i", d, d))
    out = np.empty((d.shape[0], d.shape[1] + 1))
    out[:, 0] = np.cos(th)
    out[:, 1:] = K.sinc(th)[:, None] * d
    return out


def _log_sn(x):
    v = x[:, 1:]
    n = np.sqrt(np.einsum("ij,ij->i", v, v))
    pos = n > 0.0
    f = np.arctan2(n, x[:, 0]) / np.where(pos, n, 1.0)
    out = f[:, None] * v
    # v == 0: fixed direction e1, giving (pi, 0, ...) at the antipode
    out[~pos] = 0.0
    out[~pos, 0] = np.arctan2(0.0, x[~pos, 0])
    return out


def exp_sn(delta):
    d = np.asarray(delta, dtype=np.float64)
    return _lift(_exp_sn, d, (d.shape[-1],), (d.shape[-1] + 1,))


def log_sn(x):
    x = np.asarray(x, dtype=np.float64)
    return _lift(_log_sn, x, (x.shape[-1],), (x.shape[-1] - 1,))


def _householder_rx(x):
    k, m = x.shape
    r2 = np.einsum("ij,ij->i", x[:, 1:], x[:, 1:])
    v = x.copy()
    # x0 - 1 without cancellation when x is close to e1
    v[:, 0] = np.where(x[:, 0] > 0.0, -r2 / (1.0 + np.maximum(x[:, 0], 0.0)), x[:, 0] - 1.0)
    vv = v[:, 0] ** 2 + r2
    at_e1 = vv == 0.0
    scale = np.where(at_e1, 0.0, 2.0 / np.where(at_e1, 1.0, vv))
    out = np.broadcast_to(np.eye(m), (k, m, m)) - scale[:, None, None] * v[:, :, None] * v[:, None, :]
    # second reflection restores det = +1 and keeps R e1 = x
    out[:, :, 1] *= -1.0
    out[at_e1] = np.eye(m)
    return out


def householder_rx(x):
    """Rotation taking e1 to the unit vector ``x`` (two Householder reflections)."""
    x = np.asarray(x, dtype=np.float64)
    m = x.shape[-1]
    return _lift(_householder_rx, x, (m,), (m, m))


def _sphere2_rx(p):
    x, y, z = p[:, 0], p[:, 1], p[:, 2]
    r = np.sqrt(y * y + z * z)
    a = np.arctan2(z, y)
    c, s = np.cos(a), np.sin(a)
    out = np.empty((p.shape[0], 3, 3))
    out[:, 0, 0], out[:, 0, 1], out[:, 0, 2] = x, -r, 0.0
    out[:, 1, 0], out[:, 1, 1], out[:, 1, 2] = y, x * c, -s
    out[:, 2, 0], out[:, 2, 1], out[:, 2, 2] = z, x * s, c
    return out


def sphere2_rx(x):
    """Closed-form rotation with first column ``x`` for unit 3-vectors."""
    return _lift(_sphere2_rx, x, (3,), (3, 3))


def angle_to_complex(alpha):
    a = np.asarray(alpha, dtype=np.float64)
    return np.stack([np.cos(a), np.sin(a)], axis=-1)


def complex_to_rot2(z):
    """Unit complex (x, y) to the flattened rotation [[x, -y], [y, x]]."""
    z = np.asarray(z, dtype=np.float64)
    x, y = z[..., 0], z[..., 1]
    return np.stack([x, -y, y, x], axis=-1)


def rot2_to_angle(m):
    m = np.asarray(m, dtype=np.float64)
    return np.arctan2(m[..., 2], m[..., 0])


def _reorthonormalize(m):
    """Polar projection of (k, n, n) matrices whose drift exceeds ORTHO_DRIFT."""
    n = m.shape[-1]
    gram = np.einsum("kji,kjl->kil", m, m) - np.eye(n)
    drift = np.sqrt(np.einsum("kij,kij->k", gram, gram))
    bad = drift > ORTHO_DRIFT
    if bad.any():
        u, _, vt = np.linalg.svd(m[bad])
        m = m.copy()
        m[bad] = u @ vt
    return m


# ---------------------------------------------------------------------------
# manifold descriptors


class Manifold:
    """Base class; subclasses implement ``_boxplus`` / ``_boxminus`` on 2-D batches.

    Attributes
    ----------
    dof : int
        Tangent dimension.
    rep_size : int
        Length of the stored representation.
    v_radius : float
        Radius of the tangent ball on which boxplus is injective.
    """

    dof: int
    rep_size: int
    v_radius: float = math.inf
    name: str = "manifold"
    # batch kernels accept a (1, size) operand against a (k, size) one
    _broadcasts: bool = False

    # -- batch kernels (k, rep) x (k, dof) -> (k, rep) and (k, rep) x (k, rep) -> (k, dof)
    def _boxplus(self, x, d):
        raise NotImplementedError

    def _boxminus(self, y, x):
        raise NotImplementedError

    def _normalize(self, x):
        return x

    def _random(self, rng, k):
        raise NotImplementedError

    def identity(self):
        raise NotImplementedError

    # -- public, broadcasting API
    def _point(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1:] != (self.rep_size,):
            raise ContractViolation(f"{self.name}: point needs last axis {self.rep_size}, got shape {x.shape}")
        return x

    def _tangent(self, d):
        d = np.asarray(d, dtype=np.float64)
        if d.shape[-1:] != (self.dof,):
            raise ContractViolation(f"{self.name}: tangent needs last axis {self.dof}, got shape {d.shape}")
        return d

    def _pair(self, a, a_size, b, b_size):
        if a.shape[:-1] == b.shape[:-1]:
            lead = a.shape[:-1]
            return lead, _c(a.reshape(-1, a_size)), _c(b.reshape(-1, b_size))
        if self._broadcasts and (a.ndim == 1 or b.ndim == 1):
            # kernels broadcast a leading axis of length one themselves
            lead = a.shape[:-1] if b.ndim == 1 else b.shape[:-1]
            return lead, _c(a.reshape(-1, a_size)), _c(b.reshape(-1, b_size))
        lead = np.broadcast_shapes(a.shape[:-1], b.shape[:-1])
        a2 = np.broadcast_to(a, lead + (a_size,)).reshape(-1, a_size)
        b2 = np.broadcast_to(b, lead + (b_size,)).reshape(-1, b_size)
        return lead, _c(a2), _c(b2)

    def boxplus(self, x, delta, scale=1.0):
        """``x [+] scale*delta``."""
        x = self._point(x)
        d = self._tangent(delta)
        if scale != 1.0:
            d = d * scale
        lead, xb, db = self._pair(x, self.rep_size, d, self.dof)
        return self._boxplus(xb, db).reshape(lead + (self.rep_size,))

    def boxminus(self, y, x):
        """Tangent vector ``y [-] x`` taking ``x`` to ``y``."""
        y = self._point(y)
        x = self._point(x)
        lead, yb, xb = self._pair(y, self.rep_size, x, self.rep_size)
        return self._boxminus(yb, xb).reshape(lead + (self.dof,))

    def normalize(self, x):
        x = self._point(x)
        return self._normalize(_c(x.reshape(-1, self.rep_size))).reshape(x.shape)

    def random(self, rng, size=None):
        k = 1 if size is None else int(np.prod(size))
        out = self._random(rng, k)
        if size is None:
            return out[0]
        return out.reshape(tuple(np.atleast_1d(size)) + (self.rep_size,))

    def distance(self, x, y):
        """Induced metric ``|y [-] x|``."""
        return np.linalg.norm(self.boxminus(y, x), axis=-1)

    def equal(self, x, y, tol=1e-9):
        return bool(np.all(self.distance(x, y) <= tol))

    def within_chart(self, delta):
        """True where ``|delta| < v_radius``; compounds test each block separately."""
        d = self._tangent(delta)
        return np.linalg.norm(d, axis=-1) < self.v_radius

    def chart_ratio(self, delta):
        """Largest ratio of block norm to block chart radius."""
        d = self._tangent(delta)
        if math.isinf(self.v_radius):
            return np.zeros(d.shape[:-1])
        return np.linalg.norm(d, axis=-1) / self.v_radius

    def __repr__(self):
        return f"{type(self).__name__}()"

    def __eq__(self, other):
        return type(self) is type(other) and self.__dict__ == other.__dict__

    def __hash__(self):
        return hash((type(self).__name__, self.rep_size, self.dof))


class Euclidean(Manifold):
    """R^n with ordinary vector addition."""

    def __init__(self, n):
        if n < 1:
            raise ContractViolation("Euclidean dimension must be >= 1")
        self.dof = self.rep_size = int(n)
        self.name = f"R{n}"

    _broadcasts = True

    def _boxplus(self, x, d):
        return x + d

    def _boxminus(self, y, x):
        return y - x

    def _random(self, rng, k):
        return rng.normal(scale=3.0, size=(k, self.dof))

    def identity(self):
        return np.zeros(self.dof)

    def __repr__(self):
        return f"Euclidean({self.dof})"


class Angle(Manifold):
    """Planar angle modulo 2 pi; the stored value is not wrapped."""

    dof = rep_size = 1
    v_radius = math.pi
    name = "angle"
    _broadcasts = True

    def _boxplus(self, x, d):
        return x + d

    def _boxminus(self, y, x):
        return K.numpy_impl.nu_pi(y - x)

    def _normalize(self, x):
        return K.numpy_impl.nu_pi(x)

    def _random(self, rng, k):
        return rng.uniform(-4 * math.pi, 4 * math.pi, size=(k, 1))

    def identity(self):
        return np.zeros(1)


class UnitComplex(Manifold):
    """Unit complex numbers (cos a, sin a)."""

    dof = 1
    rep_size = 2
    v_radius = math.pi
    name = "complex"

    def _boxplus(self, x, d):
        c, s = np.cos(d[:, 0]), np.sin(d[:, 0])
        out = np.stack([x[:, 0] * c - x[:, 1] * s, x[:, 0] * s + x[:, 1] * c], axis=1)
        return self._normalize(out)

    def _boxminus(self, y, x):
        re = x[:, 0] * y[:, 0] + x[:, 1] * y[:, 1]
        im = x[:, 0] * y[:, 1] - x[:, 1] * y[:, 0]
        return np.arctan2(im, re)[:, None]

    def _normalize(self, x):
        return x / np.linalg.norm(x, axis=1, keepdims=True)

    def _random(self, rng, k):
        return angle_to_complex(rng.uniform(-math.pi, math.pi, size=k))

    def identity(self):
        return np.array([1.0, 0.0])


class RotMatrix2(Manifold):
    """2x2 rotation matrices, stored row-major as 4 numbers."""

    dof = 1
    rep_size = 4
    v_radius = math.pi
    name = "so2"

    def _boxplus(self, x, d):
        m = x.reshape(-1, 2, 2)
        c, s = np.cos(d[:, 0]), np.sin(d[:, 0])
        r = np.stack([c, -s, s, c], axis=1).reshape(-1, 2, 2)
        return _reorthonormalize(m @ r).reshape(-1, 4)

    def _boxminus(self, y, x):
        a = x.reshape(-1, 2, 2)
        b = y.reshape(-1, 2, 2)
        # entries (0,0) and (1,0) of a^T b
        m00 = a[:, 0, 0] * b[:, 0, 0] + a[:, 1, 0] * b[:, 1, 0]
        m10 = a[:, 0, 1] * b[:, 0, 0] + a[:, 1, 1] * b[:, 1, 0]
        return np.arctan2(m10, m00)[:, None]

    def _normalize(self, x):
        return _reorthonormalize(x.reshape(-1, 2, 2)).reshape(-1, 4)

    def _random(self, rng, k):
        return complex_to_rot2(UnitComplex()._random(rng, k))

    def identity(self):
        return np.array([1.0, 0.0, 0.0, 1.0])


class RotMatrix3(Manifold):
    """3x3 rotation matrices, stored row-major as 9 numbers."""

    dof = 3
    rep_size = 9
    v_radius = math.pi
    name = "so3"

    def _boxplus(self, x, d):
        m = x.reshape(-1, 3, 3) @ K.so3_exp(d)
        return _reorthonormalize(m).reshape(-1, 9)

    def _boxminus(self, y, x):
        rel = np.einsum("kji,kjl->kil", x.reshape(-1, 3, 3), y.reshape(-1, 3, 3))
        return K.so3_log(_c(rel))

    def _normalize(self, x):
        return _reorthonormalize(x.reshape(-1, 3, 3)).reshape(-1, 9)

    def _random(self, rng, k):
        return K.quat_to_matrix(UnitQuaternion()._random(rng, k)).reshape(-1, 9)

    def identity(self):
        return np.eye(3).ravel()


class UnitQuaternion(Manifold):
    """Rotations as unit quaternions (w, x, y, z); q and -q are the same point."""

    dof = 3
    rep_size = 4
    v_radius = math.pi
    name = "quat"
    _broadcasts = True

    def _boxplus(self, x, d):
        return K.quat_boxplus(x, d)

    def _boxminus(self, y, x):
        return K.quat_boxminus(y, x)

    def _normalize(self, x):
        return K.quat_canonical(K.quat_normalize(x))

    def _random(self, rng, k):
        return self._normalize(rng.normal(size=(k, 4)))

    def identity(self):
        return np.array([1.0, 0.0, 0.0, 0.0])


class UnitSphere(Manifold):
    """The n-sphere in R^(n+1), charted through a Householder rotation."""

    v_radius = math.pi

    def __init__(self, n):
        if n < 1:
            raise ContractViolation("sphere dimension must be >= 1")
        self.dof = int(n)
        self.rep_size = int(n) + 1
        self.name = f"S{n}"

    def _rx(self, x):
        return _householder_rx(x)

    def _boxplus(self, x, d):
        return self._normalize(np.einsum("kij,kj->ki", self._rx(x), _exp_sn(d)))

    def _boxminus(self, y, x):
        return _log_sn(np.einsum("kji,kj->ki", self._rx(x), y))

    def _normalize(self, x):
        return x / np.linalg.norm(x, axis=1, keepdims=True)

    def _random(self, rng, k):
        return self._normalize(rng.normal(size=(k, self.rep_size)))

    def identity(self):
        e = np.zeros(self.rep_size)
        e[0] = 1.0
        return e

    def __repr__(self):
        return f"UnitSphere({self.dof})"


class UnitSphere2(UnitSphere):
    """S^2 with the closed-form chart rotation instead of Householder."""

    def __init__(self):
        super().__init__(2)
        self.name = "S2"

    def _rx(self, x):
        return _sphere2_rx(x)

    def __repr__(self):
        return "UnitSphere2()"


def _line_canonical(x):
    """Flip sign so the first nonzero component is positive."""
    lead = x[:, 0].copy()
    for j in range(1, x.shape[1]):
        pending = lead == 0.0
        if not pending.any():
            break
        lead[pending] = x[pending, j]
    return np.where((lead < 0.0)[:, None], -x, x)


class ProjectivePlane(Manifold):
    """Lines through the origin of R^3, represented by a unit vector up to sign.

    Both operators first fix the representative sign, so results do not
    depend on which of x, -x the caller stored.
    """

    dof = 2
    rep_size = 3
    v_radius = math.pi / 2
    name = "P2"

    def _boxplus(self, x, d):
        x = _line_canonical(x)
        y = np.einsum("kij,kj->ki", _sphere2_rx(x), _exp_sn(d))
        return self._normalize(y)

    def _boxminus(self, y, x):
        x = _line_canonical(x)
        r = np.einsum("kji,kj->ki", _sphere2_rx(x), y)
        # olog branch: the class of r is {r, -r}, pick the half with w >= 0
        r = np.where((r[:, :1] < 0.0), -r, r)
        v = r[:, 1:]
        n = np.sqrt(np.einsum("ij,ij->i", v, v))
        f = np.where(n > 0.0, np.arctan2(n, r[:, 0]) / np.where(n > 0.0, n, 1.0), 0.0)
        return f[:, None] * v

    def _normalize(self, x):
        return _line_canonical(x / np.linalg.norm(x, axis=1, keepdims=True))

    def _random(self, rng, k):
        return self._normalize(rng.normal(size=(k, 3)))

    def identity(self):
        return np.array([1.0, 0.0, 0.0])


class Compound(Manifold):
    """Cartesian product of manifolds with component-wise operators.

    Components keep declaration order.  Tangent offsets are prefix sums of the
    component dofs; representation offsets are prefix sums of ``rep_size``.

    Parameters
    ----------
    components : sequence of (name, Manifold)
    """

    def __init__(self, components):
        components = list(components)
        if not components:
            raise ContractViolation("compound needs at least one component")
        names = [n for n, _ in components]
        if len(set(names)) != len(names):
            raise ContractViolation(f"duplicate component names in {names}")
        self.components = components
        self.names = names
        dofs = [m.dof for _, m in components]
        reps = [m.rep_size for _, m in components]
        self.offsets = np.concatenate([[0], np.cumsum(dofs)]).astype(int)
        self.rep_offsets = np.concatenate([[0], np.cumsum(reps)]).astype(int)
        self.dof = int(self.offsets[-1])
        self.rep_size = int(self.rep_offsets[-1])
        self.v_radius = min(m.v_radius for _, m in components)
        self._index = {n: i for i, n in enumerate(names)}
        self.name = "(" + ",".join(m.name for _, m in components) + ")"
        # products of vectors and quaternions run through one fused kernel
        kinds = []
        for _, m in components:
            if isinstance(m, Euclidean):
                kinds.append(K.KIND_EUCLIDEAN)
            elif isinstance(m, UnitQuaternion):
                kinds.append(K.KIND_QUATERNION)
            else:
                kinds = None
                break
        self._radii = np.array([m.v_radius for _, m in components])
        if kinds is not None:
            self._fused = (np.array(kinds, dtype=np.int64), self.rep_offsets.astype(np.int64),
                           self.offsets.astype(np.int64))
            self._broadcasts = True
        else:
            self._fused = None

    def _i(self, name):
        try:
            return self._index[name]
        except KeyError:
            raise ContractViolation(f"no component named {name!r}") from None

    def component(self, name):
        return self.components[self._i(name)][1]

    def idx(self, name):
        """Start of ``name`` in the flat tangent vector."""
        return int(self.offsets[self._i(name)])

    def dof_of(self, name):
        return self.component(name).dof

    def tangent_slice(self, name):
        i = self._i(name)
        return slice(int(self.offsets[i]), int(self.offsets[i + 1]))

    def rep_slice(self, name):
        i = self._i(name)
        return slice(int(self.rep_offsets[i]), int(self.rep_offsets[i + 1]))

    def get(self, x, name):
        return np.asarray(x)[..., self.rep_slice(name)]

    def pack(self, **parts):
        """Build a point from named components; missing ones take the identity."""
        unknown = set(parts) - set(self.names)
        if unknown:
            raise ContractViolation(f"unknown components {sorted(unknown)}")
        chunks = []
        for n, m in self.components:
            chunks.append(m._point(parts[n]) if n in parts else m.identity())
        lead = np.broadcast_shapes(*(c.shape[:-1] for c in chunks))
        return np.concatenate([np.broadcast_to(c, lead + c.shape[-1:]) for c in chunks], axis=-1)

    def set_diagonal(self, cov, name, values):
        """Write ``values`` (scalar or per-axis) on the diagonal block of ``name``."""
        s = self.tangent_slice(name)
        idx = np.arange(s.start, s.stop)
        cov[idx, idx] = values
        return cov

    def subblock(self, cov, row, col=None):
        col = row if col is None else col
        return cov[self.tangent_slice(row), self.tangent_slice(col)]

    def _boxplus(self, x, d):
        if self._fused is not None:
            return K.compound_boxplus(x, d, *self._fused)
        out = np.empty_like(x)
        for i, (_, m) in enumerate(self.components):
            rs = slice(self.rep_offsets[i], self.rep_offsets[i + 1])
            ts = slice(self.offsets[i], self.offsets[i + 1])
            out[:, rs] = m._boxplus(_c(x[:, rs]), _c(d[:, ts]))
        return out

    def _boxminus(self, y, x):
        if self._fused is not None:
            return K.compound_boxminus(y, x, *self._fused)
        out = np.empty((y.shape[0], self.dof))
        for i, (_, m) in enumerate(self.components):
            rs = slice(self.rep_offsets[i], self.rep_offsets[i + 1])
            ts = slice(self.offsets[i], self.offsets[i + 1])
            out[:, ts] = m._boxminus(_c(y[:, rs]), _c(x[:, rs]))
        return out

    def _normalize(self, x):
        out = np.empty_like(x)
        for i, (_, m) in enumerate(self.components):
            rs = slice(self.rep_offsets[i], self.rep_offsets[i + 1])
            out[:, rs] = m._normalize(_c(x[:, rs]))
        return out

    def _random(self, rng, k):
        return np.concatenate([m._random(rng, k) for _, m in self.components], axis=1)

    def identity(self):
        return np.concatenate([m.identity() for _, m in self.components])

    def _block_norms(self, d):
        return np.sqrt(np.add.reduceat(d * d, self.offsets[:-1], axis=-1))

    def within_chart(self, delta):
        d = self._tangent(delta)
        return np.all(self._block_norms(d) < self._radii, axis=-1)

    def chart_ratio(self, delta):
        d = self._tangent(delta)
        return np.max(self._block_norms(d) / self._radii, axis=-1)

    def __repr__(self):
        inner = ", ".join(f"({n!r}, {m!r})" for n, m in self.components)
        return f"Compound([{inner}])"

    def __eq__(self, other):
        return isinstance(other, Compound) and self.components == other.components

    def __hash__(self):
        return hash(tuple(self.names))
