"""Pose-graph optimization on top of the sparse least-squares solver."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .. import slom
from ..errors import ContractViolation
from ..manifolds import Euclidean
from .graph import QUAT, pose_repr

__all__ = ["GraphConfig", "GraphResult", "optimize_graph", "graph_rss", "write_trace", "TRACE_HEADER"]

TRACE_HEADER = ["iteration", "rss", "method", "representation"]


@dataclass(frozen=True)
class GraphConfig:
    """``repr`` is ``quat``, ``matrix`` or ``quat4d``.

    ``quat4d`` is the overparametrized baseline: each pose is a plain
    7-vector, the quaternion is normalized inside the edge function and a
    pseudo-measurement ``|q|^2 = 1`` with standard deviation ``unit_sigma``
    pins the scale.
    """

    method: str = "lm"
    repr: str = "quat"
    max_iter: int = 50
    step_tol: float = 1e-10
    rss_tol: float = 1e-10
    lam0: float = 1e-4
    eps: float = 1e-6
    unit_sigma: float = 1e-3

    def solver(self):
        return slom.OptimizeConfig(self.method, self.max_iter, self.step_tol, self.rss_tol, self.lam0, self.eps)


@dataclass
class GraphResult:
    graph: object
    trace: list
    iterations: int
    reason: str
    dof: int


def _normalized(x):
    q = x[:, 3:]
    return np.concatenate([x[:, :3], q / np.linalg.norm(q, axis=1, keepdims=True)], axis=1)


def _problem(graph, cfg):
    graph.check()
    ids = graph.ids
    if not ids:
        raise ContractViolation("graph has no nodes")
    index = {vid: k for k, vid in enumerate(ids)}
    gauge = index[graph.gauge_id()]
    poses = graph.poses(ids)
    if not graph.edges:
        deps = np.zeros((0, 2), dtype=int)
    else:
        deps = np.array([[index[e.i], index[e.j]] for e in graph.edges])
    info = np.array([e.info for e in graph.edges]).reshape(-1, 6, 6)
    zq = np.array([e.z for e in graph.edges]).reshape(-1, 7)
    terms = []
    if cfg.repr == "quat4d":
        rep = QUAT
        var_m = Euclidean(7)
        values = poses

        def f(a, b):
            return rep.between(_normalized(a), _normalized(b))

        if len(deps):
            terms.append(slom.TermBatch(f, zq, deps, rep.manifold, info=info, name="edges"))
        free = np.array([k for k in range(len(ids)) if k != gauge])
        if free.size:
            terms.append(slom.TermBatch(lambda x: np.sum(x[:, 3:] ** 2, axis=1, keepdims=True),
                                        np.ones((free.size, 1)), free[:, None], Euclidean(1),
                                        cov=np.array([[cfg.unit_sigma ** 2]]), name="unit"))
    else:
        rep = pose_repr(cfg.repr)
        var_m = rep.manifold
        values = rep.from_quat_poses(poses)
        if len(deps):
            terms.append(slom.TermBatch(rep.between, rep.from_quat_poses(zq), deps, rep.manifold, info=info,
                                        name="edges"))
    vars = slom.VariableSet([var_m] * len(ids), values, fixed=[gauge])
    return ids, rep, vars, terms


def _to_graph(graph, ids, rep, vars, cfg):
    vals = np.array(vars.values)
    if cfg.repr == "quat4d":
        vals = _normalized(vals)
    else:
        vals = rep.to_quat_poses(vals)
    out = graph.copy()
    out.nodes = {vid: vals[k] for k, vid in enumerate(ids)}
    return out


def graph_rss(graph, repr="quat"):
    """``1/2 sum_e r_e^T info_e r_e`` at the graph's current poses."""
    ids, rep, vars, terms = _problem(graph, GraphConfig(repr=repr))
    return slom.total_rss(vars, terms) if terms else 0.0


def optimize_graph(graph, config=None, full_output=False):
    """Optimize all poses except the gauge node.

    Returns ``(graph, trace)`` where ``trace[k]`` is the RSS after ``k``
    iterations, or a :class:`GraphResult` with ``full_output``.
    """
    cfg = config or GraphConfig()
    if cfg.repr not in ("quat", "matrix", "quat4d"):
        raise ContractViolation(f"unknown representation {cfg.repr!r}")
    ids, rep, vars, terms = _problem(graph, cfg)
    if not terms:
        res = slom.OptimizeResult(vars, [0.0], 0, "empty")
    else:
        res = slom.optimize(vars, terms, cfg.solver(), full_output=True)
    out = _to_graph(graph, ids, rep, res.vars, cfg)
    if full_output:
        return GraphResult(out, list(res.trace), res.iterations, res.reason, vars.total_dof)
    return out, list(res.trace)


def write_trace(path, trace, method, representation, append=False):
    """RSS trace CSV with columns iteration, rss, method, representation."""
    with open(path, "a" if append else "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if not append:
            w.writerow(TRACE_HEADER)
        for k, v in enumerate(trace):
            w.writerow([k, format(float(v), ".17g"), method, representation])
