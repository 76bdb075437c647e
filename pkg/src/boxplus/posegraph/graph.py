"""3D poses, relative-pose edges and pose graphs.

Poses are stored as 7-vectors ``(tx, ty, tz, qw, qx, qy, qz)``: a translation
followed by a unit quaternion.  For optimization the rotation part can be
re-expressed as a rotation matrix (12-vector ``t + row-major R``); both forms
use the same tangent layout, translation first.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .. import _kernels as K
from ..errors import ContractViolation
from ..manifolds import Compound, Euclidean, RotMatrix3, UnitQuaternion, quat_to_rotmatrix, rotmatrix_to_quat

__all__ = [
    "PoseEdge", "PoseGraph", "PoseRepr", "QUAT", "MATRIX", "pose_repr", "edge_residual",
    "init_from_odometry", "DisconnectedGraph",
]


class DisconnectedGraph(ValueError):
    """Some nodes cannot be reached from the gauge node."""


class PoseRepr:
    """Batched group operations for one rotation representation."""

    def __init__(self, name, rot):
        self.name = name
        self.rot = rot
        self.manifold = Compound([("t", Euclidean(3)), ("r", rot)])
        self.size = 3 + rot.rep_size

    def _split(self, x):
        return x[:, :3], x[:, 3:]

    def compose(self, a, b):
        """``a o b = (ta + Ra tb, Ra Rb)`` on ``(k, size)`` batches."""
        ta, ra = self._split(a)
        tb, rb = self._split(b)
        out = np.empty((max(len(a), len(b)), self.size))
        out[:, :3] = ta + self.rotate(ra, tb)
        out[:, 3:] = self.rmul(ra, rb)
        return out

    def between(self, a, b):
        """``a^-1 o b = (Ra^T (tb - ta), Ra^T Rb)``."""
        ta, ra = self._split(a)
        tb, rb = self._split(b)
        out = np.empty((max(len(a), len(b)), self.size))
        rai = self.rinv(ra)
        out[:, :3] = self.rotate(rai, tb - ta)
        out[:, 3:] = self.rmul(rai, rb)
        return out

    def inverse(self, a):
        ta, ra = self._split(a)
        rai = self.rinv(ra)
        out = np.empty_like(a)
        out[:, :3] = -self.rotate(rai, ta)
        out[:, 3:] = rai
        return out

    # representation specific
    def rotate(self, r, v):
        raise NotImplementedError

    def rmul(self, r1, r2):
        raise NotImplementedError

    def rinv(self, r):
        raise NotImplementedError

    def from_quat_poses(self, x):
        raise NotImplementedError

    def to_quat_poses(self, x):
        raise NotImplementedError


class _QuatRepr(PoseRepr):
    def __init__(self):
        super().__init__("quat", UnitQuaternion())

    def rotate(self, r, v):
        return K.quat_rotate(np.ascontiguousarray(r), np.ascontiguousarray(v))

    def rmul(self, r1, r2):
        return K.quat_canonical(K.quat_mul(np.ascontiguousarray(r1), np.ascontiguousarray(r2)))

    def rinv(self, r):
        return K.quat_conj(r)

    def from_quat_poses(self, x):
        return np.array(x, dtype=np.float64)

    def to_quat_poses(self, x):
        return np.array(x, dtype=np.float64)


class _MatrixRepr(PoseRepr):
    def __init__(self):
        super().__init__("matrix", RotMatrix3())

    def rotate(self, r, v):
        return np.einsum("kij,kj->ki", r.reshape(-1, 3, 3), v)

    def rmul(self, r1, r2):
        return (r1.reshape(-1, 3, 3) @ r2.reshape(-1, 3, 3)).reshape(-1, 9)

    def rinv(self, r):
        return np.ascontiguousarray(np.swapaxes(r.reshape(-1, 3, 3), 1, 2)).reshape(-1, 9)

    def from_quat_poses(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.concatenate([x[:, :3], quat_to_rotmatrix(x[:, 3:]).reshape(-1, 9)], axis=1)

    def to_quat_poses(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.concatenate([x[:, :3], rotmatrix_to_quat(x[:, 3:].reshape(-1, 3, 3))], axis=1)


QUAT = _QuatRepr()
MATRIX = _MatrixRepr()


def pose_repr(name):
    try:
        return {"quat": QUAT, "matrix": MATRIX}[name]
    except KeyError:
        raise ContractViolation(f"unknown rotation representation {name!r}") from None


@dataclass
class PoseEdge:
    """Relative measurement ``z ~ pose_from^-1 o pose_to`` with 6x6 information."""

    i: int
    j: int
    z: np.ndarray
    info: np.ndarray

    def __post_init__(self):
        if self.i == self.j:
            raise ContractViolation(f"edge {self.i}->{self.j} connects a node to itself")
        self.z = np.asarray(self.z, dtype=np.float64)
        self.info = np.asarray(self.info, dtype=np.float64)
        if self.z.shape != (7,) or self.info.shape != (6, 6):
            raise ContractViolation("edge needs a 7-vector pose and a 6x6 information matrix")


@dataclass
class PoseGraph:
    """Nodes keyed by integer id, quaternion-form poses, and edges."""

    nodes: dict = field(default_factory=dict)
    edges: list = field(default_factory=list)
    gauge: int | None = None

    def copy(self):
        return PoseGraph({k: v.copy() for k, v in self.nodes.items()},
                         [PoseEdge(e.i, e.j, e.z.copy(), e.info.copy()) for e in self.edges], self.gauge)

    @property
    def ids(self):
        return sorted(self.nodes)

    def gauge_id(self):
        if self.gauge is not None:
            return self.gauge
        return self.ids[0] if self.nodes else None

    def poses(self, ids=None):
        ids = self.ids if ids is None else ids
        return np.array([self.nodes[i] for i in ids], dtype=np.float64).reshape(len(ids), 7)

    def check(self):
        for e in self.edges:
            if e.i not in self.nodes or e.j not in self.nodes:
                raise ContractViolation(f"edge {e.i}->{e.j} references a missing node")

    def transformed(self, pose):
        """Apply a rigid transform ``pose o x`` to every node."""
        ids = self.ids
        moved = QUAT.compose(np.asarray(pose, dtype=np.float64)[None], self.poses(ids))
        g = self.copy()
        g.nodes = {i: moved[k] for k, i in enumerate(ids)}
        return g


def edge_residual(graph, edge, repr=QUAT):
    """``(pose_i^-1 o pose_j) [-] z`` as (translation; rotation) 6-vector."""
    if edge.i not in graph.nodes or edge.j not in graph.nodes:
        raise ContractViolation(f"edge {edge.i}->{edge.j} references a missing node")
    a = repr.from_quat_poses(graph.nodes[edge.i][None])
    b = repr.from_quat_poses(graph.nodes[edge.j][None])
    z = repr.from_quat_poses(edge.z[None])
    return repr.manifold.boxminus(repr.between(a, b), z)[0]


def init_from_odometry(graph):
    """Initialize poses by composing edges along a breadth-first spanning tree.

    The gauge node is placed at the origin.  Edges between consecutive ids
    (motion constraints) are preferred; other edges are only used for nodes
    the odometry chain cannot reach.
    """
    graph.check()
    g = graph.copy()
    if not g.nodes:
        return g
    root = g.gauge_id()
    adj_odo = {i: [] for i in g.nodes}
    adj_all = {i: [] for i in g.nodes}
    for e in g.edges:
        targets = (adj_odo, adj_all) if abs(e.j - e.i) == 1 else (adj_all,)
        for adj in targets:
            adj[e.i].append((e.j, e.z, False))
            adj[e.j].append((e.i, e.z, True))
    placed = {root: np.array([0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0])}
    for adj in (adj_odo, adj_all):
        queue = deque(sorted(placed))
        while queue:
            cur = queue.popleft()
            for nxt, z, backwards in adj[cur]:
                if nxt in placed:
                    continue
                step = QUAT.inverse(z[None]) if backwards else z[None]
                placed[nxt] = QUAT.compose(placed[cur][None], step)[0]
                queue.append(nxt)
    missing = sorted(set(g.nodes) - set(placed))
    if missing:
        raise DisconnectedGraph(f"nodes unreachable from gauge {root}: {missing}")
    g.nodes = {i: placed[i] for i in g.ids}
    return g
