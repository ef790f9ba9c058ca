"""Hyperboloid-model geometry with Beltrami-Klein and Poincare conversions.

Points of H^d are (d+1)-vectors x with <x, x> = -1 and x[-1] > 0, where
<x, y> = x_1 y_1 + ... + x_d y_d - x_{d+1} y_{d+1}.  All functions accept a
single vector of shape (d+1,) or a batch of shape (N, d+1) and broadcast
over the leading axes.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import InvalidArgument, NumericalDomainError

#: slack allowed below 1 in the argument of arcosh before failing
ARCOSH_SLACK = 1e-9
POINT_TOL = 1e-12
ISOMETRY_TOL = 1e-10


def signature(n: int) -> np.ndarray:
    """The diagonal of the Minkowski form on R^n, i.e. (1, ..., 1, -1)."""
    j = np.ones(n)
    j[-1] = -1.0
    return j


def minkowski_form(x, y):
    """Return <x, y>, the Minkowski product, broadcast over leading axes."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[-1] != y.shape[-1]:
        raise InvalidArgument(f"dimension mismatch: {x.shape[-1]} vs {y.shape[-1]}")
    if x.shape[-1] < 3:
        raise InvalidArgument("vectors must have dimension d+1 >= 3")
    return np.sum(x[..., :-1] * y[..., :-1], axis=-1) - x[..., -1] * y[..., -1]


def origin(d: int = 2) -> np.ndarray:
    o = np.zeros(d + 1)
    o[-1] = 1.0
    return o


def normalize(x):
    """Rescale timelike vectors onto the upper sheet of the hyperboloid."""
    x = np.asarray(x, dtype=float)
    q = -minkowski_form(x, x)
    if np.any(q <= 0):
        raise NumericalDomainError("cannot normalize a non-timelike vector onto H^d")
    x = x / np.sqrt(q)[..., None]
    return np.where(x[..., -1:] < 0, -x, x)


def lift(u):
    """Lift Euclidean coordinates u in R^d to the hyperboloid point (u, sqrt(1+|u|^2))."""
    u = np.asarray(u, dtype=float)
    last = np.sqrt(1.0 + np.sum(u * u, axis=-1))
    return np.concatenate([u, last[..., None]], axis=-1)


def check_point(x, tol: float = POINT_TOL) -> np.ndarray:
    """Validate that x lies on the upper sheet; return it as a float array."""
    x = np.asarray(x, dtype=float)
    q = minkowski_form(x, x)
    if np.any(np.abs(q + 1.0) > tol * np.maximum(1.0, x[..., -1] ** 2)):
        raise InvalidArgument("point is not on the hyperboloid <x,x> = -1")
    if np.any(x[..., -1] <= 0):
        raise InvalidArgument("point is not on the upper sheet")
    return x


def distance(x, y):
    """Hyperbolic distance arcosh(-<x, y>).

    The value is computed through the equivalent half-chord form
    2 asinh(|x - y|_M / 2), which keeps full relative precision for nearby
    points; the arcosh domain check is still applied to -<x, y>.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    c = -minkowski_form(x, y)
    # round-off in <x, y> scales with the size of its terms
    slack = ARCOSH_SLACK * np.maximum(1.0, np.abs(x[..., -1] * y[..., -1]))
    if np.any(c < 1.0 - slack):
        raise NumericalDomainError(f"arcosh argument {np.min(c)!r} below 1")
    diff = x - y
    chord2 = np.maximum(minkowski_form(diff, diff), 0.0)
    return 2.0 * np.arcsinh(0.5 * np.sqrt(chord2))


def pairwise_distance(x, y):
    """Distance matrix between two point batches of shapes (N, n) and (M, n)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    return distance(x[:, None, :], y[None, :, :])


def to_beltrami_klein(x):
    x = np.asarray(x, dtype=float)
    return x[..., :-1] / x[..., -1:]


def from_beltrami_klein(k):
    k = np.asarray(k, dtype=float)
    r2 = np.sum(k * k, axis=-1)
    if np.any(r2 >= 1.0):
        raise InvalidArgument("Beltrami-Klein point must lie in the open unit ball")
    scale = 1.0 / np.sqrt(1.0 - r2)
    return np.concatenate([k * scale[..., None], scale[..., None]], axis=-1)


def to_poincare(x):
    x = np.asarray(x, dtype=float)
    return x[..., :-1] / (1.0 + x[..., -1:])


def from_poincare(u):
    u = np.asarray(u, dtype=float)
    r2 = np.sum(u * u, axis=-1)
    if np.any(r2 >= 1.0):
        raise InvalidArgument("Poincare point must lie in the open unit ball")
    denom = 1.0 - r2
    return np.concatenate([2.0 * u / denom[..., None], ((1.0 + r2) / denom)[..., None]], axis=-1)


def _chord_to_sphere(p, u):
    """Distances from p along +u and -u to the unit sphere (p inside the ball)."""
    b = np.sum(p * u, axis=-1)
    c = np.sum(p * p, axis=-1) - 1.0
    q = np.sqrt(b * b - c) + np.abs(b)
    # roots of t^2 + 2bt + c = 0 written without cancellation
    big, small = q, -c / q
    forward = np.where(b >= 0, small, big)
    backward = np.where(b >= 0, big, small)
    return forward, backward


def bk_distance(x, y):
    """Cross-ratio distance in the Beltrami-Klein ball.

    With x_inf, x, y, y_inf in order on the chord through x and y, the
    distance is 1/2 log(|x - y_inf| |y - x_inf| / (|x - x_inf| |y - y_inf|)).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(np.sum(x * x, axis=-1) >= 1.0) or np.any(np.sum(y * y, axis=-1) >= 1.0):
        raise InvalidArgument("Beltrami-Klein points must lie in the open unit ball")
    diff = y - x
    length = np.sqrt(np.sum(diff * diff, axis=-1))
    same = length == 0
    safe = np.where(same, 1.0, length)
    u = diff / safe[..., None]
    x_fwd, x_bwd = _chord_to_sphere(x, u)   # |x - y_inf|, |x - x_inf|
    y_fwd, y_bwd = _chord_to_sphere(y, u)   # |y - y_inf|, |y - x_inf|
    out = 0.5 * (np.log(x_fwd) + np.log(y_bwd) - np.log(x_bwd) - np.log(y_fwd))
    out = np.where(same, 0.0, out)
    return out if out.ndim else float(out)


def tangent_toward(x, y):
    """Unit tangent vector at x pointing along the geodesic toward y."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    u = y + minkowski_form(x, y)[..., None] * x
    return u / np.sqrt(minkowski_form(u, u))[..., None]


def angle_at(x, y, z):
    """Angle at x between the geodesics toward y and toward z."""
    c = minkowski_form(tangent_toward(x, y), tangent_toward(x, z))
    return np.arccos(np.clip(c, -1.0, 1.0))


def geodesic_point(x, y, t: float):
    """Point at fraction t in [0, 1] along the geodesic segment from x to y."""
    if not 0.0 <= t <= 1.0:
        raise InvalidArgument(f"t must lie in [0, 1], got {t}")
    return geodesic_points(x, y, np.array([t]))[0]


def geodesic_points(x, y, ts):
    """Points along the segment from x to y at each fraction in ts, shape (len(ts), n)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ts = np.asarray(ts, dtype=float)
    dist = float(distance(x, y))
    if dist < 1e-12:
        pts = (1.0 - ts)[:, None] * x + ts[:, None] * y
        return normalize(pts)
    a = np.sinh((1.0 - ts) * dist) / np.sinh(dist)
    b = np.sinh(ts * dist) / np.sinh(dist)
    pts = normalize(a[:, None] * x + b[:, None] * y)
    pts[ts == 0.0] = x
    pts[ts == 1.0] = y
    return pts


def _canonical_sign(v: np.ndarray, tol: float = 1e-12) -> float:
    if v[-1] > tol:
        return 1.0
    if v[-1] < -tol:
        return -1.0
    for c in v[:-1]:
        if abs(c) > tol:
            return 1.0 if c > 0 else -1.0
    raise InvalidArgument("zero normal")


@dataclass(frozen=True, eq=False)
class Hyperplane:
    """Oriented geodesic hyperplane {x : <x, v> = 0} with unit spacelike normal v.

    The orientation is canonical: v[-1] > 0, so the closed half-space
    H+ = {<x, v> <= 0} contains the origin in its interior.  Hyperplanes
    through the origin use the lexicographically positive normal.
    """

    normal: np.ndarray
    index: int | None = None

    def __post_init__(self):
        v = np.array(self.normal, dtype=float)
        if v.ndim != 1 or v.shape[0] < 3:
            raise InvalidArgument("normal must be a (d+1)-vector with d >= 2")
        if abs(minkowski_form(v, v) - 1.0) > POINT_TOL * max(1.0, v[-1] ** 2):
            raise InvalidArgument("hyperplane normal must satisfy <v,v> = 1")
        v = v * _canonical_sign(v)
        v.setflags(write=False)
        object.__setattr__(self, "normal", v)

    @classmethod
    def from_vector(cls, v, index: int | None = None) -> "Hyperplane":
        """Build from any spacelike vector, rescaling it to unit length."""
        v = np.asarray(v, dtype=float)
        q = minkowski_form(v, v)
        if q <= 0:
            raise InvalidArgument("hyperplane normal must be spacelike")
        return cls(v / np.sqrt(q), index)

    @property
    def dim(self) -> int:
        return self.normal.shape[0] - 1

    def side(self, x):
        """<x, v>: negative on the origin side H+, positive on H-."""
        return minkowski_form(x, self.normal)

    def distance(self, x):
        return dist_to_hyperplane(x, self)

    def reflection(self) -> "LorentzIsometry":
        return reflect(self)

    def foot(self, x):
        """Nearest point of the hyperplane to x."""
        x = np.asarray(x, dtype=float)
        return normalize(x - self.side(x)[..., None] * self.normal)

    def closest_point_to_origin(self) -> np.ndarray:
        return self.foot(origin(self.dim))


def dist_to_hyperplane(x, v):
    """Distance from x to the hyperplane with unit normal v: asinh(|<x, v>|)."""
    if isinstance(v, Hyperplane):
        v = v.normal
    return np.arcsinh(np.abs(minkowski_form(x, v)))


def reflection_matrix(v) -> np.ndarray:
    """Matrix of x -> x - 2 <x, v> v for a unit spacelike v."""
    v = np.asarray(v, dtype=float)
    return np.eye(v.shape[0]) - 2.0 * np.outer(v, signature(v.shape[0]) * v)


def reflect(v) -> "LorentzIsometry":
    """Reflection across a hyperplane (given as Hyperplane or unit normal)."""
    if isinstance(v, Hyperplane):
        v = v.normal
    v = np.asarray(v, dtype=float)
    if abs(minkowski_form(v, v) - 1.0) > POINT_TOL:
        raise InvalidArgument("reflection needs a unit spacelike normal")
    return LorentzIsometry(reflection_matrix(v))


def reflect_points(x, v):
    """Reflect a batch of points across hyperplanes with unit normals v (broadcast)."""
    x = np.asarray(x, dtype=float)
    return x - 2.0 * minkowski_form(x, v)[..., None] * v


def point_reflection_matrix(p) -> np.ndarray:
    """Isometry fixing p and negating its tangent space: x -> -x - 2 <x, p> p."""
    p = np.asarray(p, dtype=float)
    n = p.shape[0]
    return -np.eye(n) - 2.0 * np.outer(p, signature(n) * p)


@dataclass(frozen=True, eq=False)
class LorentzIsometry:
    """Linear isometry of H^d: M^T J M = J and M maps the upper sheet to itself."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        n = m.shape[0]
        if m.shape != (n, n) or n < 3:
            raise InvalidArgument("isometry matrix must be square of size >= 3")
        if lorentz_defect(m) > ISOMETRY_TOL * max(1.0, np.abs(m).max() ** 2):
            raise InvalidArgument("matrix does not preserve the Minkowski form")
        if m[-1, -1] <= 0:
            raise InvalidArgument("matrix swaps the sheets of the hyperboloid")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def identity(cls, d: int = 2) -> "LorentzIsometry":
        return cls(np.eye(d + 1))

    def __call__(self, x):
        """Apply to points, re-normalizing onto the hyperboloid."""
        x = np.asarray(x, dtype=float)
        return normalize(x @ self.matrix.T)

    def __matmul__(self, other: "LorentzIsometry") -> "LorentzIsometry":
        return LorentzIsometry(self.matrix @ other.matrix)

    def inverse(self) -> "LorentzIsometry":
        return LorentzIsometry(lorentz_inverse(self.matrix))

    def apply_normal(self, v) -> np.ndarray:
        """Normal of the image hyperplane: M[{<x,v>=0}] = {<y, Mv> = 0}."""
        w = np.asarray(v, dtype=float) @ self.matrix.T
        return w / np.sqrt(minkowski_form(w, w))[..., None]


def lorentz_defect(m) -> float:
    """max |M^T J M - J|."""
    m = np.asarray(m, dtype=float)
    j = np.diag(signature(m.shape[-1]))
    return float(np.abs(m.T @ j @ m - j).max())


def lorentz_inverse(m):
    """Inverse of a Lorentz matrix, J M^T J (works on stacks)."""
    m = np.asarray(m, dtype=float)
    j = signature(m.shape[-1])
    return j[:, None] * np.swapaxes(m, -1, -2) * j[None, :]


class ConvexPolytope:
    """Intersection of closed half-spaces {x : <x, n_i> <= 0} in H^d.

    ``normals`` are outward unit normals.  Use :meth:`from_hyperplanes` to
    build one from canonical hyperplanes and side flags.
    """

    def __init__(self, normals):
        normals = np.atleast_2d(np.asarray(normals, dtype=float))
        q = minkowski_form(normals, normals)
        if np.any(np.abs(q - 1.0) > 1e-10):
            raise InvalidArgument("polytope normals must be unit spacelike")
        self.normals = normals
        self.n = normals.shape[1]
        self._subsets = self._build_subsets()
        if not self._subsets and normals.shape[0] > 0:
            raise InvalidArgument("empty polytope: no face flat meets H^d inside the polytope")

    @classmethod
    def from_hyperplanes(cls, hyperplanes, on_origin_side) -> "ConvexPolytope":
        """``on_origin_side[i]`` true means the polytope lies in H_i^+."""
        normals = []
        for h, plus in zip(hyperplanes, on_origin_side):
            v = h.normal if isinstance(h, Hyperplane) else np.asarray(h, dtype=float)
            normals.append(v if plus else -v)
        return cls(np.array(normals))

    def contains(self, x, tol: float = 1e-12):
        x = np.asarray(x, dtype=float)
        scale = np.maximum(1.0, np.abs(x).max(axis=-1))
        return np.all(minkowski_form(x[..., None, :], self.normals) <= tol * scale[..., None], axis=-1)

    def _build_subsets(self):
        """Projectors onto every flat cut out by at most d of the face hyperplanes.

        A flat of codimension d is a single point; it is kept only when the
        point exists and lies in the polytope.  Returns a list of
        (indices, projector) pairs where projector maps x to its
        Minkowski-orthogonal projection onto the flat's linear span.
        """
        d = self.n - 1
        j = signature(self.n)
        k = self.normals.shape[0]
        out = []
        for size in range(1, min(d, k) + 1):
            for idx in combinations(range(k), size):
                vs = self.normals[list(idx)]
                gram = minkowski_form(vs[:, None, :], vs[None, :, :])
                if abs(np.linalg.det(gram)) < 1e-12:
                    continue
                # x -> x - V^T G^{-1} V J x
                proj = np.eye(self.n) - vs.T @ np.linalg.solve(gram, vs * j)
                if size == d:
                    w = proj[:, -1]
                    q = -minkowski_form(w, w)
                    if q <= 0:
                        continue
                    pt = w / np.sqrt(q) * np.sign(w[-1])
                    if not self.contains(pt, 1e-9):
                        continue
                out.append((idx, proj))
        return out

    def project(self, x):
        """Nearest-point projection onto the polytope (batched)."""
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1, self.n)
        best = flat.copy()
        best_d = np.where(self.contains(flat), 0.0, np.inf)
        for _, proj in self._subsets:
            y = flat @ proj.T
            q = -minkowski_form(y, y)
            ok = (q > 0) & (best_d > 0)
            if not ok.any():
                continue
            y = y[ok] / np.sqrt(q[ok])[:, None]
            y = np.where(y[:, -1:] < 0, -y, y)
            feasible = self.contains(y, 1e-10)
            if not feasible.any():
                continue
            rows = np.flatnonzero(ok)[feasible]
            dist = distance(flat[rows], y[feasible])
            better = dist < best_d[rows]
            best_d[rows[better]] = dist[better]
            best[rows[better]] = y[feasible][better]
        if np.any(np.isinf(best_d)):
            raise InvalidArgument("empty polytope: no feasible nearest point")
        return best.reshape(x.shape)

    def distance(self, x):
        x = np.asarray(x, dtype=float)
        return distance(x, self.project(x))

    def vertices(self) -> np.ndarray:
        d = self.n - 1
        pts = []
        for idx, proj in self._subsets:
            if len(idx) == d:
                w = proj[:, -1]
                pts.append(w / np.sqrt(-minkowski_form(w, w)) * np.sign(w[-1]))
        return np.array(pts)


def project_to_polytope(x, polytope: ConvexPolytope):
    """Nearest point of the polytope to x; the identity on the polytope."""
    return polytope.project(x)
