"""Reading and writing the g2o text format for 3D pose graphs.

Supported records::

    VERTEX_SE3:QUAT id tx ty tz qx qy qz qw
    EDGE_SE3:QUAT i j tx ty tz qx qy qz qw I11 I12 .. I16 I22 .. I66
    FIX id

The 21 information values are the upper triangle in row-major order.
Quaternions are scalar-last in the file and scalar-first in memory.
"""
from __future__ import annotations

import io
import warnings

import numpy as np

from .graph import PoseEdge, PoseGraph

__all__ = ["G2OFormatError", "parse_g2o", "read_g2o", "write_g2o", "format_g2o", "QUAT_TOL", "INFO_FLOOR"]

QUAT_TOL = 1e-6
INFO_FLOOR = 1e-9
_TRIU = np.triu_indices(6)


class G2OFormatError(ValueError):
    def __init__(self, lineno, message):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


def _floats(tokens, n, lineno, what):
    if len(tokens) != n:
        raise G2OFormatError(lineno, f"{what} expects {n} numbers, got {len(tokens)}")
    try:
        return np.array([float(t) for t in tokens])
    except ValueError as exc:
        raise G2OFormatError(lineno, f"{what}: {exc}") from None


def _int(token, lineno):
    try:
        return int(token)
    except ValueError:
        raise G2OFormatError(lineno, f"bad id {token!r}") from None


def _pose(vals, lineno):
    """File order (t, qx, qy, qz, qw) to memory order (t, qw, qx, qy, qz)."""
    q = np.array([vals[6], vals[3], vals[4], vals[5]])
    n = float(np.linalg.norm(q))
    if n == 0.0:
        raise G2OFormatError(lineno, "zero quaternion")
    if abs(n - 1.0) > QUAT_TOL:
        warnings.warn(f"line {lineno}: quaternion norm {n:.9g} renormalized", stacklevel=3)
    if abs(n - 1.0) > 4 * np.finfo(float).eps:
        q = q / n
    return np.concatenate([vals[:3], q])


def _info(vals, lineno):
    info = np.zeros((6, 6))
    info[_TRIU] = vals
    info = info + np.triu(info, 1).T
    w, v = np.linalg.eigh(info)
    if w.min() < 0.0:
        warnings.warn(f"line {lineno}: information matrix not PSD, eigenvalues clamped at {INFO_FLOOR:g}",
                      stacklevel=3)
        info = (v * np.maximum(w, INFO_FLOOR)) @ v.T
        info = 0.5 * (info + info.T)
    return info


def parse_g2o(stream):
    """Parse a g2o stream (or string) into a :class:`PoseGraph`."""
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    g = PoseGraph()
    for lineno, line in enumerate(stream, start=1):
        tok = line.split()
        if not tok or tok[0].startswith("#"):
            continue
        tag = tok[0]
        if tag == "VERTEX_SE3:QUAT":
            if len(tok) < 2:
                raise G2OFormatError(lineno, "vertex without id")
            vid = _int(tok[1], lineno)
            if vid in g.nodes:
                raise G2OFormatError(lineno, f"duplicate vertex {vid}")
            g.nodes[vid] = _pose(_floats(tok[2:], 7, lineno, tag), lineno)
        elif tag == "EDGE_SE3:QUAT":
            if len(tok) < 3:
                raise G2OFormatError(lineno, "edge without endpoints")
            i, j = _int(tok[1], lineno), _int(tok[2], lineno)
            vals = _floats(tok[3:], 28, lineno, tag)
            if i == j:
                raise G2OFormatError(lineno, f"edge {i}->{j} is a self loop")
            g.edges.append(PoseEdge(i, j, _pose(vals[:7], lineno), _info(vals[7:], lineno)))
        elif tag == "FIX":
            if len(tok) != 2:
                raise G2OFormatError(lineno, "FIX expects one id")
            g.gauge = _int(tok[1], lineno)
        else:
            raise G2OFormatError(lineno, f"unsupported record {tag!r}")
    return g


def read_g2o(path):
    with open(path) as fh:
        return parse_g2o(fh)


def _fmt(x):
    return format(float(x), ".17g")


def _pose_tokens(p):
    return [_fmt(v) for v in (p[0], p[1], p[2], p[4], p[5], p[6], p[3])]


def format_g2o(graph):
    lines = []
    for vid in graph.ids:
        lines.append(" ".join(["VERTEX_SE3:QUAT", str(vid)] + _pose_tokens(graph.nodes[vid])))
    if graph.gauge is not None:
        lines.append(f"FIX {graph.gauge}")
    for e in graph.edges:
        info = [_fmt(v) for v in e.info[_TRIU]]
        lines.append(" ".join(["EDGE_SE3:QUAT", str(e.i), str(e.j)] + _pose_tokens(e.z) + info))
    return "\n".join(lines) + ("\n" if lines else "")


def write_g2o(graph, path):
    with open(path, "w") as fh:
        fh.write(format_g2o(graph))
