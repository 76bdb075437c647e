"""Loosely coupled INS-GPS filter built on the manifold UKF."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import _kernels as K
from ..manifolds import Compound, Euclidean, UnitQuaternion
from ..ukf import MeasurementModel, ProcessModel, UkfBelief, predict, update
from .sim import NoiseConfig

__all__ = [
    "ins_manifold", "ins_process", "process_noise_cov", "gps_measurement", "gps_noise_cov",
    "initial_belief", "FilterTrace", "run_filter", "INITIAL_VAR",
]

INITIAL_VAR = 0.001
_BASE = [("pos", Euclidean(3)), ("orient", UnitQuaternion()), ("vel", Euclidean(3))]
_MANIFOLDS = {
    False: Compound(_BASE),
    True: Compound(_BASE + [("bias", Euclidean(3))]),
}


def ins_manifold(colored=False):
    """``R^3 x SO(3) x R^3`` (9 DOF), with a trailing ``R^3`` GPS bias when colored (12 DOF)."""
    return _MANIFOLDS[bool(colored)]


def _process_batch(X, acc, gyro, dt, gravity, decay):
    out = np.empty_like(X)
    q = np.ascontiguousarray(X[:, 3:7])
    out[:, 0:3] = X[:, 0:3] + X[:, 7:10] * dt
    out[:, 3:7] = K.quat_boxplus(q, np.ascontiguousarray(gyro * dt)[None])
    out[:, 7:10] = X[:, 7:10] + (K.quat_rotate(q, np.ascontiguousarray(acc)[None]) + gravity) * dt
    if X.shape[1] > 10:
        out[:, 10:] = decay * X[:, 10:]
    return out


def ins_process(state, acc, gyro, cfg):
    """Euler step of the strapdown model.

    ``orient' = orient [+] gyro*dt``, ``vel' = vel + (orient*acc + g) dt``,
    ``pos' = pos + vel*dt`` (previous velocity), ``bias' = exp(-dt/T) bias``.
    Accepts a single state or a ``(k, rep)`` batch.
    """
    X = np.asarray(state, dtype=np.float64)
    single = X.ndim == 1
    Xb = np.ascontiguousarray(X.reshape(-1, X.shape[-1]))
    out = _process_batch(Xb, np.asarray(acc, dtype=np.float64), np.asarray(gyro, dtype=np.float64), cfg.dt,
                         np.asarray(cfg.gravity, dtype=np.float64), cfg.bias_decay)
    return out[0] if single else out


def process_noise_cov(cfg):
    """Diagonal R: zero on position, ``density*dt`` on orientation and velocity,
    ``sigma_b2 (1 - exp(-2 dt/T))`` on the bias."""
    diag = [0.0] * 3 + [cfg.sigma_w * cfg.dt] * 3 + [cfg.sigma_v * cfg.dt] * 3
    if cfg.colored:
        diag += [cfg.bias_step_var] * 3
    return np.diag(diag)


def gps_measurement(state, colored=False):
    """Position, plus the bias block when the state carries one."""
    X = np.asarray(state, dtype=np.float64)
    z = X[..., 0:3]
    if colored:
        z = z + X[..., 10:13]
    return z


def gps_noise_cov(cfg):
    return cfg.sigma_p ** 2 * np.eye(3)


def initial_belief(cfg, mean=None):
    m = ins_manifold(cfg.colored)
    cov = INITIAL_VAR * np.eye(m.dof)
    if cfg.colored:
        m.set_diagonal(cov, "bias", cfg.sigma_b2)
    return UkfBelief(m, m.identity() if mean is None else mean, cov)


@dataclass
class FilterTrace:
    t: np.ndarray
    mean: np.ndarray  # (N+1, rep)
    cov: np.ndarray  # (N+1, dof, dof)
    colored: bool


def run_filter(log, cfg, belief=None, use_gps=True):
    """One predict per IMU sample and one update per GPS fix.

    Entry ``k`` of the trace is the belief at grid time ``t[k]``, after the
    GPS update when a fix exists there.
    """
    belief = belief or initial_belief(cfg)
    m = belief.manifold
    gravity = np.asarray(cfg.gravity, dtype=np.float64)
    decay = cfg.bias_decay
    dt = cfg.dt
    R = process_noise_cov(cfg)
    colored = cfg.colored
    pm = ProcessModel(lambda u, X: _process_batch(X, u[0], u[1], dt, gravity, decay), R)
    mm = MeasurementModel(lambda X: gps_measurement(X, colored), gps_noise_cov(cfg), Euclidean(3))

    n = len(log.acc)
    means = np.empty((n + 1, m.rep_size))
    covs = np.empty((n + 1, m.dof, m.dof))
    means[0], covs[0] = belief.mean, belief.cov
    gps_at = dict(zip(log.gps_idx.tolist(), range(len(log.gps_idx)))) if use_gps else {}
    for k in range(n):
        try:
            belief = predict(belief, (log.acc[k], log.gyro[k]), pm)
            j = gps_at.get(k + 1)
            if j is not None:
                belief = update(belief, log.gps[j], mm)
        except Exception as exc:
            raise type(exc)(f"t={log.t[k + 1]:.4f}: {exc}") from exc
        means[k + 1] = belief.mean
        covs[k + 1] = belief.cov
    return FilterTrace(np.asarray(log.t[: n + 1]), means, covs, colored)
