"""Estimation on boxplus manifolds: primitives, statistics, UKF and least squares."""
from . import errors, manifolds, slom, stats, ukf
from ._kernels import BACKEND
from .manifolds import (
    Angle,
    Compound,
    Euclidean,
    Manifold,
    ProjectivePlane,
    RotMatrix2,
    RotMatrix3,
    UnitComplex,
    UnitQuaternion,
    UnitSphere,
    UnitSphere2,
)
from .stats import ManifoldGaussian, covariance_of_points, mean_of_points, sample
from .ukf import MeasurementModel, ProcessModel, Ukf, UkfBelief

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "errors", "manifolds", "slom", "stats", "ukf",
    "Angle", "Compound", "Euclidean", "Manifold", "ProjectivePlane", "RotMatrix2", "RotMatrix3",
    "UnitComplex", "UnitQuaternion", "UnitSphere", "UnitSphere2",
    "ManifoldGaussian", "covariance_of_points", "mean_of_points", "sample",
    "MeasurementModel", "ProcessModel", "Ukf", "UkfBelief",
]
