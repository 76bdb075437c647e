"""Randomized checks of the boxplus axioms, metric properties and isomorphisms.

Each check reports the worst residual it saw over ``trials`` seeded draws.
The registry maps command-line names to manifold factories; tests can add
their own entries (for example a deliberately broken manifold) through
:func:`register`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .manifolds import (
    Angle, Compound, Euclidean, Manifold, ProjectivePlane, RotMatrix2, RotMatrix3, UnitComplex, UnitQuaternion,
    UnitSphere, UnitSphere2, angle_to_complex, complex_to_rot2, quat_to_rotmatrix,
)

__all__ = [
    "CheckResult", "MANIFOLDS", "register", "resolve", "random_tangent", "random_compound", "check_axioms",
    "check_metric", "check_isomorphisms", "check_lemmas", "triangle_scalar_gap", "run_suite", "AXIOM_TOL",
    "LIPSCHITZ_SLACK",
]

AXIOM_TOL = 1e-9
LIPSCHITZ_SLACK = 1e-12
# fraction of the chart radius used when drawing tangent vectors
CHART_FRACTION = 0.999
# scale of tangent draws on manifolds with an unbounded chart
FLAT_SCALE = 10.0


@dataclass(frozen=True)
class CheckResult:
    manifold: str
    check: str
    worst: float
    tol: float
    trials: int

    @property
    def passed(self):
        return bool(self.worst <= self.tol)


_POOL = (
    lambda: Euclidean(2), Angle, UnitComplex, RotMatrix2, RotMatrix3, UnitQuaternion, UnitSphere2,
    lambda: UnitSphere(4), ProjectivePlane,
)


def random_compound(seed=0, parts=3):
    """Compound of ``parts`` components drawn from the shipped manifolds."""
    rng = np.random.default_rng(seed)
    picks = rng.choice(len(_POOL), size=parts, replace=True)
    return Compound([(f"c{k}", _POOL[p]()) for k, p in enumerate(picks)])


MANIFOLDS = {
    "euclidean1": lambda: Euclidean(1),
    "euclidean3": lambda: Euclidean(3),
    "euclidean9": lambda: Euclidean(9),
    "angle": Angle,
    "complex": UnitComplex,
    "rot2": RotMatrix2,
    "rot3": RotMatrix3,
    "quaternion": UnitQuaternion,
    "sphere2": UnitSphere2,
    "sphere4": lambda: UnitSphere(4),
    "projective2": ProjectivePlane,
    "compound": random_compound,
}


def register(name, factory):
    """Add a manifold factory under ``name``; returns the previous entry, if any."""
    old = MANIFOLDS.get(name)
    MANIFOLDS[name] = factory
    return old


def resolve(selector):
    """``{name: Manifold}`` for a registry name or ``"all"``."""
    if selector == "all":
        return {k: f() for k, f in MANIFOLDS.items()}
    if selector not in MANIFOLDS:
        raise KeyError(selector)
    return {selector: MANIFOLDS[selector]()}


def _ball(rng, k, n, radius):
    d = rng.standard_normal((k, n))
    d /= np.maximum(np.linalg.norm(d, axis=1, keepdims=True), 1e-300)
    return d * (radius * rng.uniform(0.0, 1.0, size=(k, 1)))


def random_tangent(m, rng, k, fraction=CHART_FRACTION):
    """``k`` tangent vectors inside the chart (per block for compounds)."""
    if isinstance(m, Compound):
        return np.concatenate([random_tangent(c, rng, k, fraction) for _, c in m.components], axis=1)
    if math.isinf(m.v_radius):
        return FLAT_SCALE * rng.standard_normal((k, m.dof))
    return _ball(rng, k, m.dof, fraction * m.v_radius)


def _norm(a):
    return np.linalg.norm(a, axis=-1)


def _worst(a):
    return float(np.max(a)) if np.size(a) else 0.0


def check_axioms(m: Manifold, trials, rng):
    """Worst residuals of the four axioms.

    4a: ``x [+] 0 == x``; 4b: ``x [+] (y [-] x) == y``;
    4c: ``(x [+] d) [-] x == d``; 4d: ``|(x [+] d1) [-] (x [+] d2)| <= |d1 - d2|``.
    Point equality is measured with the manifold's own distance.
    """
    name = m.name
    if trials == 0:
        return [CheckResult(name, c, 0.0, t, 0) for c, t in
                (("4a", AXIOM_TOL), ("4b", AXIOM_TOL), ("4c", AXIOM_TOL), ("4d", LIPSCHITZ_SLACK))]
    x = m.random(rng, trials)
    y = m.random(rng, trials)
    d1 = random_tangent(m, rng, trials)
    d2 = random_tangent(m, rng, trials)
    a = _norm(m.boxminus(m.boxplus(x, np.zeros((trials, m.dof))), x))
    b = m.distance(m.boxplus(x, m.boxminus(y, x)), y)
    c = _norm(m.boxminus(m.boxplus(x, d1), x) - d1)
    d = _norm(m.boxminus(m.boxplus(x, d1), m.boxplus(x, d2))) - _norm(d1 - d2)
    return [
        CheckResult(name, "4a", _worst(a), AXIOM_TOL, trials),
        CheckResult(name, "4b", _worst(b), AXIOM_TOL, trials),
        CheckResult(name, "4c", _worst(c), AXIOM_TOL, trials),
        CheckResult(name, "4d", max(_worst(d), 0.0), LIPSCHITZ_SLACK, trials),
    ]


def check_metric(m: Manifold, trials, rng):
    """Identity, symmetry and triangle inequality of ``d(x, y) = |y [-] x|``."""
    name = m.name
    if trials == 0:
        return [CheckResult(name, c, 0.0, AXIOM_TOL, 0) for c in ("metric-identity", "metric-symmetry",
                                                                   "metric-triangle")]
    x, y, z = (m.random(rng, trials) for _ in range(3))
    ident = m.distance(x, x)
    sym = np.abs(m.distance(x, y) - m.distance(y, x))
    tri = m.distance(x, z) - m.distance(x, y) - m.distance(y, z)
    return [
        CheckResult(name, "metric-identity", _worst(ident), AXIOM_TOL, trials),
        CheckResult(name, "metric-symmetry", _worst(sym), AXIOM_TOL, trials),
        CheckResult(name, "metric-triangle", max(_worst(tri), 0.0), AXIOM_TOL, trials),
    ]


def check_isomorphisms(m: Manifold, trials, rng):
    """``phi(x [+] d) [-] (phi(x) [+] d)`` for the maps defined on ``m``.

    Quaternions map to rotation matrices; angles map to unit complex numbers
    and on to 2x2 rotation matrices.  Other manifolds have no check.
    """
    if isinstance(m, UnitQuaternion):
        maps = [("iso-rot3", RotMatrix3(), lambda q: quat_to_rotmatrix(q).reshape(-1, 9))]
    elif type(m) is Angle:
        maps = [("iso-complex", UnitComplex(), lambda a: angle_to_complex(a[:, 0])),
                ("iso-rot2", RotMatrix2(), lambda a: complex_to_rot2(angle_to_complex(a[:, 0])))]
    elif isinstance(m, UnitComplex):
        maps = [("iso-rot2", RotMatrix2(), complex_to_rot2)]
    else:
        return []
    out = []
    for label, target, phi in maps:
        if trials == 0:
            out.append(CheckResult(m.name, label, 0.0, AXIOM_TOL, 0))
            continue
        x = m.random(rng, trials)
        d = random_tangent(m, rng, trials)
        r = _norm(target.boxminus(phi(m.boxplus(x, d)), target.boxplus(phi(x), d)))
        out.append(CheckResult(m.name, label, _worst(r), AXIOM_TOL, trials))
    return out


def check_lemmas(m: Manifold, trials, rng):
    """Chordal distance identities for quaternions and rotation matrices.

    Quaternions: ``min_s |a - s b|^2 = 2 - 2 cos(d/2)``.
    Rotation matrices: ``|A - B|_F^2 = 4 - 4 cos d``.
    """
    if isinstance(m, UnitQuaternion):
        label, fn = "chord-quaternion", lambda a, b: np.minimum(_norm(a - b), _norm(a + b)) ** 2
        ref = lambda d: 2.0 - 2.0 * np.cos(d / 2.0)
    elif isinstance(m, RotMatrix3):
        label, fn = "chord-rot3", lambda a, b: _norm(a - b) ** 2
        ref = lambda d: 4.0 - 4.0 * np.cos(d)
    else:
        return []
    if trials == 0:
        return [CheckResult(m.name, label, 0.0, AXIOM_TOL, 0)]
    a = m.random(rng, trials)
    b = m.random(rng, trials)
    r = np.abs(fn(a, b) - ref(m.distance(a, b)))
    return [CheckResult(m.name, label, _worst(r), AXIOM_TOL, trials)]


def triangle_scalar_gap(n=50):
    """Largest ``arccos(ca cb + sa sb cg) - sqrt(a^2 + b^2 - 2ab cg)`` on an ``n^3`` grid.

    ``a, b`` range over ``[0, pi)`` and ``g`` over ``[0, 2 pi)``; the
    inequality claims this never exceeds zero.
    """
    ab = np.arange(n) * (math.pi / n)
    g = np.arange(n) * (2.0 * math.pi / n)
    a, b, c = np.meshgrid(ab, ab, g, indexing="ij")
    cg = np.cos(c)
    # the left side is the angle between two unit vectors; atan2 keeps it
    # accurate where arccos of a value near 1 would lose half the digits
    p1 = np.stack([np.cos(a), np.sin(a), np.zeros_like(a)], axis=-1)
    p2 = np.stack([np.cos(b), np.sin(b) * cg, np.sin(b) * np.sin(c)], axis=-1)
    lhs = np.arctan2(_norm(np.cross(p1, p2)), np.sum(p1 * p2, axis=-1))
    rhs = np.sqrt(np.maximum(a * a + b * b - 2.0 * a * b * cg, 0.0))
    return float(np.max(lhs - rhs))


def run_suite(selector="all", trials=1000, seed=0):
    """All checks for the selected manifolds; returns a list of CheckResult."""
    results = []
    for k, (key, m) in enumerate(resolve(selector).items()):
        rng = np.random.default_rng([seed, k])
        for check in (check_axioms, check_metric, check_isomorphisms, check_lemmas):
            for r in check(m, trials, rng):
                results.append(CheckResult(key, r.check, r.worst, r.tol, r.trials))
    return results
