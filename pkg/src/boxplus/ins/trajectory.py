"""Analytic figure-eight flight path with an embedded loop and a barrel roll.

The horizontal path is a lemniscate ``(A sin th, B sin th cos th)`` rotated so
that it starts heading along +x.  A full circle is spliced in around the tip of
the first lobe, altitude follows ``H (1 - cos 2 th)/2``, and the vehicle rolls
once about its forward axis while passing the crossing point.  The curve
parameter runs as ``th = 2 pi (t/T - sin(2 pi t/T)/(2 pi))``, so the vehicle
starts and stops at rest at the origin with identity orientation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..manifolds import UnitQuaternion, quat_to_rotmatrix

__all__ = ["TrajectoryConfig", "Truth", "generate_trajectory", "smoothstep5"]

GRAVITY = np.array([0.0, 0.0, -9.81])


@dataclass(frozen=True)
class TrajectoryConfig:
    duration: float = 120.0
    dt: float = 0.01
    lobe_x: float = 40.0  # A
    lobe_y: float = 30.0  # B
    height: float = 5.0  # H
    loop_radius: float = 5.0
    loop_width: float = 0.8  # parameter span of the loop
    roll_width: float = 0.6  # parameter span of the roll

    def __post_init__(self):
        if self.duration < 0 or self.dt <= 0:
            raise ValueError("duration must be >= 0 and dt > 0")
        if min(self.lobe_x, self.lobe_y, self.loop_width, self.roll_width) <= 0:
            raise ValueError("trajectory scales must be positive")

    @property
    def steps(self):
        return int(round(self.duration / self.dt))


@dataclass
class Truth:
    """Sampled ground truth; arrays have one row per IMU grid time."""

    t: np.ndarray
    pos: np.ndarray
    quat: np.ndarray
    vel: np.ndarray
    acc: np.ndarray  # body-frame specific force over [t_k, t_k+1)
    gyro: np.ndarray  # body rate over [t_k, t_k+1)
    dt: float
    gravity: np.ndarray

    def __len__(self):
        return len(self.t)


def smoothstep5(x):
    """Quintic ramp 0 -> 1 with vanishing first and second derivatives at both ends."""
    x = np.clip(x, 0.0, 1.0)
    return x * x * x * (10.0 - 15.0 * x + 6.0 * x * x)


def _smoothstep5_d(x):
    inside = (x > 0.0) & (x < 1.0)
    return np.where(inside, 30.0 * x * x * (1.0 - x) ** 2, 0.0)


def _curve(cfg, th):
    """Position and its derivative with respect to the curve parameter."""
    A, B, H = cfg.lobe_x, cfg.lobe_y, cfg.height
    beta = math.atan2(B, A)
    cb, sb = math.cos(beta), math.sin(beta)
    rot = np.array([[cb, sb], [-sb, cb]])

    base = np.stack([A * np.sin(th), 0.5 * B * np.sin(2 * th)], axis=-1) @ rot.T
    dbase = np.stack([A * np.cos(th), B * np.cos(2 * th)], axis=-1) @ rot.T

    # circle spliced in at the tip of the first lobe, in the local tangent frame
    u = rot @ np.array([0.0, -1.0])
    n = np.array([-u[1], u[0]])
    t0 = 0.5 * math.pi - 0.5 * cfg.loop_width
    x = (th - t0) / cfg.loop_width
    phi = 2.0 * math.pi * smoothstep5(x)
    dphi = 2.0 * math.pi * _smoothstep5_d(x) / cfg.loop_width
    rho = cfg.loop_radius
    loop = rho * (np.sin(phi)[:, None] * u + (1.0 - np.cos(phi))[:, None] * n)
    dloop = (rho * dphi)[:, None] * (np.cos(phi)[:, None] * u + np.sin(phi)[:, None] * n)

    pos = np.zeros((len(th), 3))
    dpos = np.zeros((len(th), 3))
    pos[:, :2] = base + loop
    dpos[:, :2] = dbase + dloop
    pos[:, 2] = 0.5 * H * (1.0 - np.cos(2 * th))
    dpos[:, 2] = H * np.sin(2 * th)
    return pos, dpos


def _orientation(cfg, th, dpos):
    psi = np.arctan2(dpos[:, 1], dpos[:, 0])
    r0 = math.pi - 0.5 * cfg.roll_width
    roll = 2.0 * math.pi * smoothstep5((th - r0) / cfg.roll_width)
    cz, sz = np.cos(psi / 2), np.sin(psi / 2)
    c, s = np.cos(roll / 2), np.sin(roll / 2)
    # heading about z, then roll about the body x axis
    q = np.stack([cz * c, cz * s, sz * s, sz * c], axis=1)
    return UnitQuaternion().normalize(q)


def generate_trajectory(cfg=None, gravity=GRAVITY):
    """Sample the path on the IMU grid and derive consistent IMU readings.

    Readings are the exact increments between grid states: the body rate
    ``(q_{k+1} [-] q_k)/dt`` and the specific force ``R_k^T ((v_{k+1}-v_k)/dt - g)``.
    Feeding them through the Euler process model reproduces orientation and
    velocity on the grid exactly.
    """
    cfg = cfg or TrajectoryConfig()
    n = cfg.steps
    dt = cfg.dt
    t = np.arange(n + 1) * dt
    T = max(cfg.duration, dt)
    w = 2.0 * math.pi / T
    th = 2.0 * math.pi * (t / T - np.sin(w * t) / (2.0 * math.pi))
    dth = 2.0 * math.pi * (1.0 - np.cos(w * t)) / T
    pos, dpos = _curve(cfg, th)
    vel = dpos * dth[:, None]
    quat = _orientation(cfg, th, dpos)

    gravity = np.asarray(gravity, dtype=np.float64)
    so3 = UnitQuaternion()
    gyro = so3.boxminus(quat[1:], quat[:-1]) / dt
    rot = quat_to_rotmatrix(quat[:-1])
    world = (vel[1:] - vel[:-1]) / dt - gravity
    acc = np.einsum("kji,kj->ki", rot, world)
    return Truth(t, pos, quat, vel, acc, gyro, dt, gravity)
