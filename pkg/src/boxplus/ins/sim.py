"""Sensor simulation and the CSV log format."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .trajectory import GRAVITY, Truth

__all__ = ["NoiseConfig", "SimLog", "simulate_sensors", "write_simlog", "read_simlog", "SIMLOG_HEADER"]

SIMLOG_HEADER = ["t", "kind"] + [f"v{i}" for i in range(1, 14)]


@dataclass(frozen=True)
class NoiseConfig:
    """Sensor noise and filter tuning.

    ``sigma_w`` and ``sigma_v`` are noise densities (rad^2/s and m^2/s^3).
    A discrete IMU sample then has variance ``density/dt``; the filter's
    process noise uses ``density*dt``.  Setting ``bias_T`` enables the
    Gauss-Markov GPS bias with stationary variance ``sigma_b2``.
    """

    dt: float = 0.01
    sigma_w: float = math.radians(0.05) ** 2
    sigma_v: float = 0.002 ** 2
    sigma_p: float = 0.75
    gps_every: int = 25
    sigma_b2: float = 5.0
    bias_T: float | None = None
    gravity: tuple = tuple(GRAVITY)

    def __post_init__(self):
        if self.dt <= 0 or self.gps_every < 1:
            raise ValueError("dt must be positive and gps_every >= 1")
        if min(self.sigma_w, self.sigma_v, self.sigma_p) < 0:
            raise ValueError("noise levels must be non-negative")
        if self.bias_T is not None and (self.bias_T <= 0 or self.sigma_b2 <= 0):
            raise ValueError("bias model needs T > 0 and sigma_b2 > 0")

    @property
    def colored(self):
        return self.bias_T is not None

    @property
    def bias_decay(self):
        return math.exp(-self.dt / self.bias_T) if self.colored else 1.0

    @property
    def bias_step_var(self):
        return self.sigma_b2 * (1.0 - math.exp(-2.0 * self.dt / self.bias_T)) if self.colored else 0.0

    @classmethod
    def noiseless(cls, **kw):
        return cls(sigma_w=0.0, sigma_v=0.0, sigma_p=0.0, **kw)


@dataclass
class SimLog:
    """Ground truth plus sensor samples.

    ``acc``/``gyro`` row ``k`` drives the step from ``t[k]`` to ``t[k+1]``.
    ``gps_idx`` are grid indices with a GPS fix ``gps[j]``.
    """

    truth: Truth
    acc: np.ndarray
    gyro: np.ndarray
    gps_idx: np.ndarray
    gps: np.ndarray
    bias: np.ndarray | None = None
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    @property
    def t(self):
        return self.truth.t


def simulate_sensors(truth, cfg, seed=0, rng=None):
    """Add white IMU noise and GPS noise (plus the optional AR(1) bias)."""
    if abs(truth.dt - cfg.dt) > 1e-12:
        raise ValueError(f"truth dt {truth.dt} differs from noise config dt {cfg.dt}")
    rng = np.random.default_rng(seed) if rng is None else rng
    n = len(truth.t) - 1
    acc = truth.acc + rng.standard_normal((n, 3)) * math.sqrt(cfg.sigma_v / cfg.dt)
    gyro = truth.gyro + rng.standard_normal((n, 3)) * math.sqrt(cfg.sigma_w / cfg.dt)
    bias = None
    if cfg.colored:
        bias = np.empty((n + 1, 3))
        bias[0] = rng.standard_normal(3) * math.sqrt(cfg.sigma_b2)
        steps = rng.standard_normal((n, 3)) * math.sqrt(cfg.bias_step_var)
        a = cfg.bias_decay
        for k in range(n):
            bias[k + 1] = a * bias[k] + steps[k]
    idx = np.arange(cfg.gps_every, n + 1, cfg.gps_every)
    gps = truth.pos[idx] + rng.standard_normal((len(idx), 3)) * cfg.sigma_p
    if bias is not None:
        gps = gps + bias[idx]
    return SimLog(truth, acc, gyro, idx, gps, bias, seed)


def _fmt(x):
    return format(float(x), ".17g")


def write_simlog(log, path):
    """CSV with one row per record: ``truth`` (pos, quat, vel[, bias]), ``imu`` (acc, gyro), ``gps``."""
    tr = log.truth
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SIMLOG_HEADER)
        gps_at = dict(zip(log.gps_idx.tolist(), range(len(log.gps_idx))))
        for k in range(len(tr.t)):
            vals = list(tr.pos[k]) + list(tr.quat[k]) + list(tr.vel[k])
            if log.bias is not None:
                vals += list(log.bias[k])
            w.writerow([_fmt(tr.t[k]), "truth"] + [_fmt(v) for v in vals])
            if k in gps_at:
                w.writerow([_fmt(tr.t[k]), "gps"] + [_fmt(v) for v in log.gps[gps_at[k]]])
            if k < len(log.acc):
                w.writerow([_fmt(tr.t[k]), "imu"] + [_fmt(v) for v in list(log.acc[k]) + list(log.gyro[k])])


def read_simlog(path, gravity=GRAVITY):
    """Inverse of :func:`write_simlog`; truth IMU increments are not stored."""
    t, truth, imu, gps, gps_t, bias = [], [], [], [], [], []
    with open(path, newline="") as fh:
        rows = csv.reader(fh)
        header = next(rows)
        if header[:2] != ["t", "kind"]:
            raise ValueError(f"{path}: not a simulation log")
        for row in rows:
            vals = [float(v) for v in row[2:] if v != ""]
            if row[1] == "truth":
                t.append(float(row[0]))
                truth.append(vals[:10])
                if len(vals) == 13:
                    bias.append(vals[10:])
            elif row[1] == "imu":
                imu.append(vals)
            elif row[1] == "gps":
                gps_t.append(len(t) - 1)
                gps.append(vals)
            else:
                raise ValueError(f"unknown record kind {row[1]!r}")
    truth = np.array(truth).reshape(-1, 10)
    imu = np.array(imu).reshape(-1, 6)
    t = np.array(t)
    dt = float(t[1] - t[0]) if len(t) > 1 else 0.01
    tr = Truth(t, truth[:, :3], truth[:, 3:7], truth[:, 7:10], np.zeros((len(imu), 3)), np.zeros((len(imu), 3)),
               dt, np.asarray(gravity, dtype=np.float64))
    return SimLog(tr, imu[:, :3], imu[:, 3:], np.array(gps_t, dtype=int), np.array(gps).reshape(-1, 3),
                  np.array(bias) if bias else None)
