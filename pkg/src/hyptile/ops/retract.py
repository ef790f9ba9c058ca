"""Extension from a convex polytope through the nearest-point retraction."""

from __future__ import annotations

import numpy as np

from .. import hyperbolic as hb
from ..errors import InvalidArgument
from .fields import ScalarField


class RetractExtension(ScalarField):
    """E f(x) = f(r(x)) * max(1 - dist(x, N) / eps, 0) with r the projection onto N."""

    def __init__(self, polytope: hb.ConvexPolytope, epsilon: float, f: ScalarField):
        self.polytope = polytope
        self.epsilon = float(epsilon)
        self.f = f
        self.name = f"retract({f.name})"

    def evaluate_on_tiles(self, x, tile_idx):
        r = self.polytope.project(x)
        lam = np.maximum(1.0 - hb.distance(x, r) / self.epsilon, 0.0)
        out = np.zeros(len(x))
        live = lam > 0
        if np.any(live):
            out[live] = lam[live] * self.f.evaluate(r[live])
        return out


def extend_from_retract(
    polytope: hb.ConvexPolytope, epsilon: float, f: ScalarField, basepoint=None, tol: float = 1e-12
) -> RetractExtension:
    if not epsilon > 0:
        raise InvalidArgument("epsilon must be positive")
    if basepoint is None:
        o = hb.origin(polytope.n - 1)
        basepoint = o if polytope.contains(o) else polytope.project(o)
    if abs(float(f.evaluate(np.atleast_2d(basepoint))[0])) > tol:
        raise InvalidArgument("f must vanish at the basepoint")
    return RetractExtension(polytope, epsilon, f)


def polytope_diameter(polytope: hb.ConvexPolytope) -> float:
    v = polytope.vertices()
    return float(hb.pairwise_distance(v, v).max()) if len(v) else 0.0


def retract_norm_bound(polytope: hb.ConvexPolytope, epsilon: float) -> float:
    """Lip(r) + diam(N) / eps with Lip(r) = 1 for the nearest-point projection."""
    return 1.0 + polytope_diameter(polytope) / epsilon
