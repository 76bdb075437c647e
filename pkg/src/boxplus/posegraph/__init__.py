"""3D pose-graph optimization."""
from .g2o import G2OFormatError, format_g2o, parse_g2o, read_g2o, write_g2o
from .graph import (
    MATRIX, QUAT, DisconnectedGraph, PoseEdge, PoseGraph, PoseRepr, edge_residual, init_from_odometry, pose_repr,
)
from .optimize import GraphConfig, GraphResult, graph_rss, optimize_graph, write_trace
from .synthetic import generate_sphere_graph, sphere_poses

__all__ = [
    "G2OFormatError", "format_g2o", "parse_g2o", "read_g2o", "write_g2o", "MATRIX", "QUAT", "DisconnectedGraph",
    "PoseEdge", "PoseGraph", "PoseRepr", "edge_residual", "init_from_odometry", "pose_repr", "GraphConfig",
    "GraphResult", "graph_rss", "optimize_graph", "write_trace", "generate_sphere_graph", "sphere_poses",
]
