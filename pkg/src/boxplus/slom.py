"""Sparse nonlinear least squares on boxplus manifolds.

Minimizes ``1/2 sum_t |f_t(x) [-] z_t|^2_{Sigma_t}`` with Gauss-Newton or
Levenberg-Marquardt.  Jacobians are central differences of
``delta -> f(x [+] delta) [-] z``.  Updates are applied with boxplus, so the
estimate never leaves the manifold.

Terms are stored as :class:`TermBatch` objects: one vectorized residual
function evaluated for many measurements at once.  A single
:class:`MeasurementTerm` is converted to a batch of one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .errors import ContractViolation, LMStalled, RankDeficient
from .manifolds import Manifold

__all__ = [
    "VariableSet", "MeasurementTerm", "TermBatch", "OptimizeConfig", "OptimizeResult",
    "numeric_jacobian", "residuals", "total_rss", "whitened_system", "normal_equations",
    "gauss_newton_step", "levenberg_marquardt_step", "optimize", "DENSE_LIMIT",
]

# above this many free DOF the normal equations are solved sparsely
DENSE_LIMIT = 2000
LAMBDA_MAX = 1e12
# relative pivot size below which the normal matrix counts as singular
PIVOT_RTOL = 1e-13


class VariableSet:
    """Ordered variables, each a point on its own manifold.

    Variables sharing an equal manifold are stored in one stacked array so
    that boxplus over all of them is a single batched call.  Fixed variables
    keep their value and get no tangent columns.
    """

    def __init__(self, manifolds: Sequence[Manifold], values, fixed=()):
        manifolds = list(manifolds)
        if len(manifolds) != len(values):
            raise ContractViolation("need one value per manifold")
        self.manifolds = manifolds
        self.fixed = frozenset(int(i) for i in fixed)
        for i in self.fixed:
            if not 0 <= i < len(manifolds):
                raise ContractViolation(f"fixed index {i} out of range")
        group_key = {}
        self._group_manifold = []
        self._group_of = np.empty(len(manifolds), dtype=int)
        self._row_of = np.empty(len(manifolds), dtype=int)
        rows = []
        for i, m in enumerate(manifolds):
            gid = group_key.setdefault(m, len(group_key))
            if gid == len(self._group_manifold):
                self._group_manifold.append(m)
                rows.append([])
            self._group_of[i] = gid
            self._row_of[i] = len(rows[gid])
            rows[gid].append(m._point(values[i]).copy())
        self._group_values = [np.array(r, dtype=np.float64).reshape(len(r), -1) for r in rows]
        self.offsets = np.full(len(manifolds), -1, dtype=int)
        off = 0
        for i, m in enumerate(manifolds):
            if i not in self.fixed:
                self.offsets[i] = off
                off += m.dof
        self.total_dof = off

    def __len__(self):
        return len(self.manifolds)

    def __getitem__(self, i):
        return self._group_values[self._group_of[i]][self._row_of[i]]

    @property
    def values(self):
        return [self[i] for i in range(len(self))]

    def stacked(self, idx):
        """Values of the variables ``idx`` as one ``(len(idx), rep)`` array."""
        idx = np.asarray(idx, dtype=int)
        gids = self._group_of[idx]
        if gids.size and np.any(gids != gids[0]):
            raise ContractViolation("stacked variables must share one manifold")
        return self._group_values[gids[0]][self._row_of[idx]]

    def manifold_of(self, i):
        return self.manifolds[i]

    def copy(self):
        new = object.__new__(VariableSet)
        new.__dict__.update(self.__dict__)
        new._group_values = [g.copy() for g in self._group_values]
        return new

    def boxplus(self, delta):
        """Apply the flat free-variable tangent ``delta``; returns a new set."""
        delta = np.asarray(delta, dtype=np.float64)
        if delta.shape != (self.total_dof,):
            raise ContractViolation(f"delta must have length {self.total_dof}, got {delta.shape}")
        new = self.copy()
        for gid, m in enumerate(self._group_manifold):
            members = np.flatnonzero((self._group_of == gid) & (self.offsets >= 0))
            if members.size == 0:
                continue
            cols = self.offsets[members][:, None] + np.arange(m.dof)
            rows = self._row_of[members]
            vals = new._group_values[gid]
            vals[rows] = m.boxplus(vals[rows], delta[cols])
        return new


def _whitener(m, zd, cov=None, info=None):
    if (cov is None) == (info is None):
        raise ContractViolation("give exactly one of cov or info")
    a = np.asarray(cov if cov is not None else info, dtype=np.float64)
    if a.shape == (zd, zd):
        a = np.broadcast_to(a, (m, zd, zd))
    if a.shape != (m, zd, zd):
        raise ContractViolation(f"covariance must be ({zd},{zd}) or ({m},{zd},{zd}), got {a.shape}")
    try:
        L = np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        raise ContractViolation("measurement covariance / information is not SPD") from None
    if info is not None:
        return np.ascontiguousarray(np.swapaxes(L, 1, 2))
    eye = np.broadcast_to(np.eye(zd), (m, zd, zd))
    return np.linalg.solve(L, eye)


@dataclass
class TermBatch:
    """Many measurements sharing one residual function.

    Parameters
    ----------
    f : callable
        ``f(X_0, ..., X_{d-1}) -> (m, zrep)`` where ``X_j`` is the ``(m, rep)``
        stack of values of the ``j``-th dependency of every measurement.
    z : (m, zrep) array
    deps : (m, d) int array
        Variable indices per measurement and slot.
    manifold : Manifold
        Measurement manifold.
    cov, info : array, optional
        Covariance or information, either shared ``(zd, zd)`` or per
        measurement ``(m, zd, zd)``.  Exactly one must be given.
    """

    f: Callable
    z: np.ndarray
    deps: np.ndarray
    manifold: Manifold
    cov: np.ndarray | None = None
    info: np.ndarray | None = None
    name: str = "term"
    whiten: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.deps = np.atleast_2d(np.asarray(self.deps, dtype=int))
        m = self.deps.shape[0]
        self.z = self.manifold._point(self.z).reshape(m, self.manifold.rep_size)
        if self.deps.shape[1] == 0:
            raise ContractViolation(f"{self.name}: deps must be non-empty")
        self.whiten = _whitener(m, self.manifold.dof, self.cov, self.info)

    @property
    def size(self):
        return self.deps.shape[0]

    @property
    def dim(self):
        return self.manifold.dof


@dataclass
class MeasurementTerm:
    """One measurement ``z`` of ``f(vars[deps[0]], vars[deps[1]], ...)``."""

    f: Callable
    z: np.ndarray
    cov: np.ndarray
    deps: Sequence[int]
    manifold: Manifold
    name: str = "term"

    def as_batch(self):
        f = self.f

        def batched(*cols):
            return np.asarray(f(*(c[0] for c in cols)), dtype=np.float64)[None]

        return TermBatch(batched, np.asarray(self.z)[None], np.asarray(self.deps)[None], self.manifold,
                         cov=np.asarray(self.cov, dtype=np.float64), name=self.name)


def _batches(terms):
    out = []
    for t in terms:
        out.append(t.as_batch() if isinstance(t, MeasurementTerm) else t)
    return out


def _check_deps(vars, batches):
    n = len(vars)
    for b in batches:
        if b.deps.min() < 0 or b.deps.max() >= n:
            raise ContractViolation(f"{b.name}: dependency index out of range")


def _slot_values(vars, b):
    return [vars.stacked(b.deps[:, j]) for j in range(b.deps.shape[1])]


def _raw_residual(b, vals):
    try:
        pred = b.f(*vals)
    except Exception as exc:
        raise type(exc)(f"{b.name}: {exc}") from exc
    return b.manifold.boxminus(pred, b.z)


def residuals(vars, terms):
    """Unwhitened residuals ``f [-] z``, one ``(m, zd)`` array per batch."""
    batches = _batches(terms)
    return [_raw_residual(b, _slot_values(vars, b)) for b in batches]


def _rss(vars, batches):
    total = 0.0
    for b in batches:
        r = np.einsum("kij,kj->ki", b.whiten, _raw_residual(b, _slot_values(vars, b)))
        total += 0.5 * float(np.einsum("ki,ki->", r, r))
    return total


def total_rss(vars, terms):
    """``1/2 sum |f(x) [-] z|^2_Sigma``."""
    return _rss(vars, _batches(terms))


def _batch_jacobian(vars, b, eps, vals=None):
    vals = _slot_values(vars, b) if vals is None else vals
    blocks = []
    for j in range(b.deps.shape[1]):
        mj = vars.manifolds[b.deps[0, j]]
        blk = np.empty((b.size, b.dim, mj.dof))
        for k in range(mj.dof):
            e = np.zeros(mj.dof)
            e[k] = eps
            plus = list(vals)
            minus = list(vals)
            plus[j] = mj.boxplus(vals[j], e)
            minus[j] = mj.boxplus(vals[j], -e)
            blk[:, :, k] = (_raw_residual(b, plus) - _raw_residual(b, minus)) / (2.0 * eps)
        blocks.append(blk)
    return blocks


def numeric_jacobian(term, vars, eps=1e-6):
    """Central-difference Jacobian of one term.

    Returns a dict ``{variable index: (zd, dof) block}``; for a
    :class:`TermBatch`, a list with one ``(m, zd, dof)`` block per slot.
    """
    if eps <= 0:
        raise ContractViolation("eps must be positive")
    if isinstance(term, MeasurementTerm):
        blocks = _batch_jacobian(vars, term.as_batch(), eps)
        out = {}
        for v, blk in zip(term.deps, blocks):
            out[v] = out.get(v, 0.0) + blk[0]
        return out
    return _batch_jacobian(vars, term, eps)


def whitened_system(vars, terms, eps=1e-6):
    """Sparse whitened Jacobian ``W J`` (free columns only), residual ``W r`` and RSS."""
    batches = _batches(terms)
    _check_deps(vars, batches)
    rows_all, cols_all, data_all, res = [], [], [], []
    row0 = 0
    for b in batches:
        vals = _slot_values(vars, b)
        r = np.einsum("kij,kj->ki", b.whiten, _raw_residual(b, vals))
        res.append(r.ravel())
        blocks = _batch_jacobian(vars, b, eps, vals)
        zd = b.dim
        row_idx = row0 + np.arange(b.size)[:, None] * zd + np.arange(zd)[None, :]
        for j, blk in enumerate(blocks):
            wblk = np.einsum("kij,kjl->kil", b.whiten, blk)
            dj = blk.shape[2]
            coff = vars.offsets[b.deps[:, j]]
            keep = coff >= 0
            if not keep.any():
                continue
            rr = np.broadcast_to(row_idx[keep][:, :, None], (keep.sum(), zd, dj))
            cc = np.broadcast_to((coff[keep][:, None] + np.arange(dj))[:, None, :], (keep.sum(), zd, dj))
            rows_all.append(rr.ravel())
            cols_all.append(cc.ravel())
            data_all.append(wblk[keep].ravel())
        row0 += b.size * zd
    n = vars.total_dof
    if rows_all:
        J = scipy.sparse.csr_matrix(
            (np.concatenate(data_all), (np.concatenate(rows_all), np.concatenate(cols_all))), shape=(row0, n)
        )
    else:
        J = scipy.sparse.csr_matrix((row0, n))
    r = np.concatenate(res) if res else np.zeros(0)
    return J, r, 0.5 * float(r @ r)


def normal_equations(vars, terms, eps=1e-6, dense=None):
    """``H = J^T W^T W J``, ``g = J^T W^T W r`` and the current RSS."""
    J, r, rss = whitened_system(vars, terms, eps)
    H = (J.T @ J).tocsc()
    g = J.T @ r
    if dense is None:
        dense = vars.total_dof <= DENSE_LIMIT
    return (H.toarray() if dense else H), g, rss


def _solve(H, g, lam=0.0):
    """Solve ``(H + lam diag(H)) x = g``."""
    if scipy.sparse.issparse(H):
        A = (H + lam * scipy.sparse.diags(H.diagonal())).tocsc() if lam else H.tocsc()
        d = A.diagonal()
        try:
            lu = scipy.sparse.linalg.splu(A, permc_spec="NATURAL", diag_pivot_thresh=0.0,
                                          options={"SymmetricMode": True})
        except RuntimeError as exc:
            raise RankDeficient(f"rank-deficient problem ({exc})") from None
        piv = np.abs(lu.U.diagonal())
        if piv.size and (piv.min() <= PIVOT_RTOL * max(d.max(), 1e-300)):
            raise RankDeficient("rank-deficient problem")
        x = lu.solve(g)
    else:
        A = H + lam * np.diag(np.diag(H)) if lam else H
        if A.size == 0:
            return np.zeros(0)
        try:
            c, low = scipy.linalg.cho_factor(A, lower=True, check_finite=True)
        except np.linalg.LinAlgError:
            raise RankDeficient("rank-deficient problem") from None
        piv = np.diag(c) ** 2
        if piv.min() <= PIVOT_RTOL * max(np.diag(A).max(), 1e-300):
            raise RankDeficient("rank-deficient problem")
        x = scipy.linalg.cho_solve((c, low), g)
    if not np.all(np.isfinite(x)):
        raise RankDeficient("rank-deficient problem")
    return x


@dataclass
class StepResult:
    vars: VariableSet
    rss: float
    step_norm: float
    lam: float = 0.0
    accepted: bool = True
    prev_rss: float = math.nan


def _gn(vars, batches, eps):
    H, g, rss0 = normal_equations(vars, batches, eps)
    step = -_solve(H, g)
    new = vars.boxplus(step)
    return StepResult(new, _rss(new, batches), float(np.linalg.norm(step)), prev_rss=rss0)


def gauss_newton_step(vars, terms, eps=1e-6):
    """One update ``x [+] -(J^T S^-1 J)^-1 J^T S^-1 (f(x) [-] z)``.

    Returns ``(new_vars, rss_after)``.
    """
    res = _gn(vars, _batches(terms), eps)
    return res.vars, res.rss


def _lm(vars, batches, lam, eps, step_tol=0.0, rss_tol=0.0):
    H, g, rss0 = normal_equations(vars, batches, eps)
    while True:
        step = -_solve(H, g, lam)
        norm = float(np.linalg.norm(step))
        new = vars.boxplus(step)
        rss = _rss(new, batches)
        if rss < rss0 or (lam == 0.0):
            return StepResult(new, rss, norm, lam / 10.0, True, rss0)
        # a step too small to matter, or no measurable change, means converged
        if norm < step_tol or abs(rss - rss0) <= rss_tol * max(rss0, 1e-300):
            return StepResult(vars, rss0, norm, lam, False, rss0)
        lam = max(lam, 1e-300) * 10.0
        if lam > LAMBDA_MAX:
            raise LMStalled(f"LM stalled: damping exceeded {LAMBDA_MAX:g} (rss {rss0:.6g})")


def levenberg_marquardt_step(vars, terms, lam, eps=1e-6):
    """Damped step with ``(H + lam diag(H))``.

    The damping grows tenfold until the RSS decreases; an accepted step
    returns the damping divided by ten.  ``lam = 0`` is a Gauss-Newton step.

    Returns ``(new_vars, rss_after, new_lambda)``.
    """
    if lam < 0:
        raise ContractViolation("lambda must be >= 0")
    res = _lm(vars, _batches(terms), lam, eps)
    return res.vars, res.rss, res.lam


@dataclass
class OptimizeConfig:
    method: str = "gn"
    max_iter: int = 50
    step_tol: float = 1e-9
    rss_tol: float = 1e-12
    lam0: float = 1e-4
    eps: float = 1e-6

    def __post_init__(self):
        if self.method not in ("gn", "lm"):
            raise ContractViolation(f"unknown method {self.method!r}")
        if self.max_iter < 0 or self.step_tol < 0 or self.rss_tol < 0 or self.eps <= 0:
            raise ContractViolation("invalid optimizer configuration")


@dataclass
class OptimizeResult:
    vars: VariableSet
    trace: list
    iterations: int
    reason: str


def optimize(vars, terms, config=None, full_output=False):
    """Iterate Gauss-Newton or Levenberg-Marquardt to convergence.

    ``trace[0]`` is the initial RSS and each further entry is the RSS after
    one iteration.  Stops on step norm below ``step_tol``, relative RSS
    change below ``rss_tol`` or after ``max_iter`` iterations.

    Returns ``(vars, trace)``, or an :class:`OptimizeResult` when
    ``full_output`` is set.
    """
    cfg = config or OptimizeConfig()
    batches = _batches(terms)
    _check_deps(vars, batches)
    trace = [_rss(vars, batches)]
    lam = cfg.lam0
    reason = "max_iter"
    it = 0
    for it in range(1, cfg.max_iter + 1):
        try:
            if cfg.method == "gn":
                res = _gn(vars, batches, cfg.eps)
            else:
                res = _lm(vars, batches, lam, cfg.eps, cfg.step_tol, cfg.rss_tol)
        except (RankDeficient, LMStalled) as exc:
            raise type(exc)(f"iteration {it}: {exc}") from exc
        if not res.accepted:
            reason = "converged"
            it -= 1
            break
        vars = res.vars
        lam = res.lam
        trace.append(res.rss)
        prev = trace[-2]
        if res.step_norm < cfg.step_tol:
            reason = "step_tol"
            break
        if abs(prev - res.rss) <= cfg.rss_tol * max(prev, 1e-300):
            reason = "rss_tol"
            break
    if full_output:
        return OptimizeResult(vars, trace, it, reason)
    return vars, trace
