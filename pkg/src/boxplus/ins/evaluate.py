"""Filter consistency statistics: NEES, NMEE and RMS errors over Monte Carlo runs."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.stats import chi2

from .filter import ins_manifold

__all__ = ["RunErrors", "EvalReport", "run_errors", "truth_states", "aggregate", "evaluate", "nees_band",
           "write_report"]


@dataclass
class RunErrors:
    """Per-time errors of one run: ``err = mean [-] truth``, its NEES and the per-axis std."""

    err: np.ndarray
    nees: np.ndarray
    std: np.ndarray


@dataclass
class EvalReport:
    t: np.ndarray
    rms_pos: np.ndarray
    rms_orient: np.ndarray
    rms_vel: np.ndarray
    nees: np.ndarray  # averaged over runs
    nmee: np.ndarray  # (T, dof)
    runs: int
    dof: int

    @property
    def mean_errors(self):
        """Time-averaged RMS position (m), orientation (rad) and velocity (m/s)."""
        return float(self.rms_pos.mean()), float(self.rms_orient.mean()), float(self.rms_vel.mean())

    def nees_band(self, prob=0.95):
        return nees_band(self.runs, self.dof, prob)

    def nees_fraction_inside(self, prob=0.95):
        lo, hi = self.nees_band(prob)
        return float(np.mean((self.nees >= lo) & (self.nees <= hi)))


def nees_band(runs, dof, prob=0.95):
    """Two-sided region for the run-averaged NEES: ``chi2(runs*dof)/runs`` quantiles."""
    a = 0.5 * (1.0 - prob)
    n = runs * dof
    return chi2.ppf(a, n) / runs, chi2.ppf(1.0 - a, n) / runs


def truth_states(log, colored=None):
    """Ground truth as points of the filter's state manifold."""
    colored = (log.bias is not None) if colored is None else colored
    tr = log.truth
    parts = [tr.pos, tr.quat, tr.vel]
    if colored:
        parts.append(log.bias)
    return np.concatenate(parts, axis=1)


def run_errors(trace, truth, manifold=None):
    """NEES ``e^T Sigma^-1 e`` with ``e = mean [-] truth`` at every time."""
    m = manifold or ins_manifold(trace.colored)
    err = m.boxminus(trace.mean, truth)
    try:
        L = np.linalg.cholesky(trace.cov)
    except np.linalg.LinAlgError:
        bad = [k for k in range(len(trace.cov)) if np.any(np.linalg.eigvalsh(trace.cov[k]) <= 0)]
        raise np.linalg.LinAlgError(f"singular covariance at t={trace.t[bad[0]]:.4f}") from None
    w = np.linalg.solve(L, err[..., None])[..., 0]
    nees = np.einsum("ki,ki->k", w, w)
    std = np.sqrt(np.einsum("kii->ki", trace.cov))
    return RunErrors(err, nees, std)


def aggregate(t, runs, manifold):
    """Combine per-run errors into RMS, averaged NEES and NMEE curves."""
    if not runs:
        raise ValueError("no runs to aggregate")
    err = np.stack([r.err for r in runs])
    nees = np.stack([r.nees for r in runs])
    std = np.stack([r.std for r in runs])

    def rms(name):
        s = manifold.tangent_slice(name)
        return np.sqrt(np.mean(np.sum(err[:, :, s] ** 2, axis=2), axis=0))

    return EvalReport(
        t=np.asarray(t), rms_pos=rms("pos"), rms_orient=rms("orient"), rms_vel=rms("vel"),
        nees=nees.mean(axis=0), nmee=(err / std).mean(axis=0), runs=len(runs), dof=manifold.dof,
    )


def evaluate(traces, logs):
    """Evaluate aligned filter traces against their simulation logs."""
    if len(traces) != len(logs):
        raise ValueError("need one log per trace")
    m = ins_manifold(traces[0].colored)
    runs = [run_errors(tr, truth_states(lg, tr.colored), m) for tr, lg in zip(traces, logs)]
    return aggregate(traces[0].t, runs, m)


REPORT_HEADER_BASE = ["t", "rms_pos", "rms_orient", "rms_vel", "nees"]


def write_report(report, path):
    """CSV: t, rms_pos, rms_orient, rms_vel, nees, nmee_1..nmee_n."""
    header = REPORT_HEADER_BASE + [f"nmee_{i + 1}" for i in range(report.dof)]
    cols = [report.t, report.rms_pos, report.rms_orient, report.rms_vel, report.nees] + list(report.nmee.T)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*cols):
            w.writerow([format(float(v), ".17g") for v in row])
