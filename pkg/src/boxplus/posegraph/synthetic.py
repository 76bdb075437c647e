"""Synthetic pose graphs: a robot driving a spiral around a sphere."""
from __future__ import annotations

import math

import numpy as np

from ..errors import ContractViolation
from ..manifolds import rotmatrix_to_quat
from .graph import QUAT, PoseEdge, PoseGraph, init_from_odometry

__all__ = ["sphere_poses", "generate_sphere_graph"]


def sphere_poses(n, radius=10.0, ring=None):
    """``n`` poses on a spherical spiral with ``ring`` poses per turn.

    The x axis of each pose points along the direction of travel and z points
    away from the sphere centre.  Poses are returned relative to the first
    one, so pose 0 is the identity.
    """
    ring = ring or max(4, int(round(math.sqrt(n))))
    k = np.arange(n)
    lon = 2.0 * np.pi * k / ring
    lat = -0.4 * np.pi + 0.8 * np.pi * k / max(n - 1, 1)
    cl, sl = np.cos(lat), np.sin(lat)
    up = np.stack([cl * np.cos(lon), cl * np.sin(lon), sl], axis=1)
    # tangent of the spiral: mostly eastward, tilted by the latitude climb
    east = np.stack([-np.sin(lon), np.cos(lon), np.zeros(n)], axis=1)
    north = np.stack([-sl * np.cos(lon), -sl * np.sin(lon), cl], axis=1)
    climb = (0.8 * np.pi / max(n - 1, 1)) / (2.0 * np.pi / ring)
    fwd = east * cl[:, None] + climb * north
    fwd /= np.linalg.norm(fwd, axis=1, keepdims=True)
    left = np.cross(up, fwd)
    R = np.stack([fwd, left, up], axis=2)
    poses = np.concatenate([radius * up, rotmatrix_to_quat(R)], axis=1)
    return QUAT.compose(QUAT.inverse(poses[:1]), poses)


def generate_sphere_graph(n_poses, noise, seed=0, radius=10.0, ring=None):
    """Return ``(truth, noisy)`` graphs over ``n_poses`` sphere poses.

    Edges join consecutive poses and each pose to the one a full turn
    earlier.  Every measurement is perturbed by ``z [+] N(0, noise^2 I)``,
    the same per-axis sigma in metres and radians, and carries information
    ``I / noise^2`` (``I`` when ``noise`` is 0).  The noisy graph's poses are
    initialized from the odometry edges.
    """
    if n_poses < 10:
        raise ContractViolation("need at least 10 poses")
    if noise < 0:
        raise ContractViolation("noise must be >= 0")
    ring = ring or max(4, int(round(math.sqrt(n_poses))))
    poses = sphere_poses(n_poses, radius, ring)
    pairs = [(k - 1, k) for k in range(1, n_poses)] + [(k - ring, k) for k in range(ring, n_poses)]
    pairs.sort(key=lambda p: (p[1], p[0]))
    ii = np.array([p[0] for p in pairs])
    jj = np.array([p[1] for p in pairs])
    z = QUAT.between(poses[ii], poses[jj])
    rng = np.random.default_rng(seed)
    dz = noise * rng.standard_normal((len(pairs), 6))
    zn = QUAT.manifold.boxplus(z, dz)
    info = np.eye(6) / (noise * noise) if noise > 0 else np.eye(6)
    nodes = {k: poses[k] for k in range(n_poses)}
    truth = PoseGraph(nodes, [PoseEdge(int(a), int(b), z[e], info.copy()) for e, (a, b) in enumerate(pairs)], 0)
    noisy = PoseGraph(dict(nodes), [PoseEdge(int(a), int(b), zn[e], info.copy()) for e, (a, b) in enumerate(pairs)], 0)
    return truth, init_from_odometry(noisy)
