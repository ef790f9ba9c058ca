"""Regular right-angled tilings {p,4} of the hyperbolic plane.

The tiling is generated by the reflection group of a regular right-angled
p-gon ``P`` centred at the origin.  Tile ``n`` is ``M_n(P)`` where
``M_n = R_{w_1} R_{w_2} ... R_{w_k}`` for its generator word ``w``.
Tile ids are 1-based (tile 1 is the seed); hyperplane indices are 0-based
positions in :attr:`TilingAtlas.hyperplanes`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from itertools import product

import numpy as np

from . import hyperbolic as hb
from .errors import (
    BoundaryTruncationError,
    InvalidArgument,
    OutOfAtlasError,
    ResourceLimitError,
)

DEFAULT_MAX_TILES = 250_000
KEY_QUANTUM = 1e-7
EPSILON_MARGIN = 0.9


@dataclass(frozen=True, eq=False)
class PolytopeTemplate:
    p: int
    vertices: np.ndarray          # (p, 3); vertex k at angle 2 pi k / p
    face_normals: np.ndarray      # (p, 3); face k joins vertex k and k+1, outward
    incentre: np.ndarray
    inradius: float
    circumradius: float
    side_length: float
    nonadjacent_face_gap: float
    diameter: float

    @property
    def face_count(self) -> int:
        return self.p

    @property
    def neighbor_bound(self) -> int:
        """Rough bound on touching tiles: 2^d times the number of vertices."""
        return 4 * self.p

    @property
    def faces(self) -> list[hb.Hyperplane]:
        return [hb.Hyperplane(v) for v in self.face_normals]

    @cached_property
    def extended_normals(self) -> np.ndarray:
        """Face normals in extended precision (``np.longdouble``), shape (p, 3).

        Face k has unit normal (cosh r cos a, cosh r sin a, sinh r) with
        a = (2k + 1) pi / p and cosh r = 1 / (sqrt 2 sin(pi / p)).
        """
        ld = np.longdouble
        pi = np.arccos(ld(-1))
        ch = 1 / (np.sqrt(ld(2)) * np.sin(pi / self.p))
        sh = np.sqrt(ch * ch - 1)
        a = (2 * np.arange(self.p, dtype=ld) + 1) * pi / self.p
        return np.stack([ch * np.cos(a), ch * np.sin(a), np.full(self.p, sh)], axis=1)

    @cached_property
    def extended_reflections(self) -> np.ndarray:
        """Face reflections in extended precision, shape (p, 3, 3).

        Products of these matrices lose far less to round-off than float64 ones.
        """
        n = self.extended_normals
        sig = np.array([1, 1, -1], dtype=n.dtype)
        return np.eye(3, dtype=n.dtype) - 2 * n[:, :, None] * (n * sig)[:, None, :]

    @cached_property
    def reflections(self) -> np.ndarray:
        """Reflection matrices across the template faces, shape (p, 3, 3)."""
        return self.extended_reflections.astype(float)

    @cached_property
    def polytope(self) -> hb.ConvexPolytope:
        return hb.ConvexPolytope(self.face_normals)

    def distance(self, y):
        """Distance from points y (..., 3) to the template polygon.

        Uses the dihedral symmetry: the nearest point of a point in the
        angular sector of face k lies on the closed face k.
        """
        y = np.asarray(y, dtype=float)
        flat = y.reshape(-1, 3)
        p = self.p
        theta = np.mod(np.arctan2(flat[:, 1], flat[:, 0]), 2.0 * math.pi)
        k = np.minimum((theta * p / (2.0 * math.pi)).astype(int), p - 1)
        nk = self.face_normals[k]
        ip = hb.minkowski_form(flat, nk)
        out = np.zeros(len(flat))
        outside = ip > 0
        if outside.any():
            rows = np.flatnonzero(outside)
            yk, kk, ipk = flat[rows], k[rows], ip[rows]
            foot = yk - ipk[:, None] * self.face_normals[kk]
            within = (hb.minkowski_form(foot, self.face_normals[(kk - 1) % p]) <= 0) & (
                hb.minkowski_form(foot, self.face_normals[(kk + 1) % p]) <= 0
            )
            d_face = np.arcsinh(ipk)
            d_vert = np.minimum(
                hb.distance(yk, self.vertices[kk]), hb.distance(yk, self.vertices[(kk + 1) % p])
            )
            out[rows] = np.where(within, d_face, d_vert)
        return out.reshape(y.shape[:-1])


def build_template(p: int) -> PolytopeTemplate:
    """Regular right-angled p-gon centred at the origin."""
    if not isinstance(p, (int, np.integer)) or p <= 4:
        raise InvalidArgument(
            f"p = {p}: no regular right-angled p-gon exists in H^2 for p <= 4 (need p >= 5)"
        )
    p = int(p)
    # cosh R = cot(pi/p) cot(pi/4)
    R = math.acosh(1.0 / math.tan(math.pi / p))
    ang = 2.0 * math.pi * np.arange(p) / p
    verts = np.stack(
        [math.sinh(R) * np.cos(ang), math.sinh(R) * np.sin(ang), np.full(p, math.cosh(R))], axis=1
    )
    j = hb.signature(3)
    normals = []
    for k in range(p):
        c = j * np.cross(verts[k], verts[(k + 1) % p])
        normals.append(hb.Hyperplane.from_vector(c).normal)
    normals = np.array(normals)
    o = hb.origin(2)
    inradius = float(np.min(hb.dist_to_hyperplane(o, normals)))
    circumradius = float(np.max(hb.distance(o, verts)))
    side = float(hb.distance(verts[0], verts[1]))
    gaps = [
        math.acosh(abs(float(hb.minkowski_form(normals[a], normals[b]))))
        for a in range(p)
        for b in range(a + 2, p)
        if not (a == 0 and b == p - 1)
    ]
    diam = float(hb.pairwise_distance(verts, verts).max())
    return PolytopeTemplate(
        p=p,
        vertices=verts,
        face_normals=normals,
        incentre=o,
        inradius=inradius,
        circumradius=circumradius,
        side_length=side,
        nonadjacent_face_gap=min(gaps),
        diameter=diam,
    )


@dataclass(eq=False)
class Tile:
    id: int
    word: tuple[int, ...]
    isometry: hb.LorentzIsometry
    incentre: np.ndarray
    face_hyperplanes: list[int] = field(default_factory=list)
    neighbors: list[int] = field(default_factory=list)
    generation: int = 0


class _PointIndex:
    """Dictionary of vectors for approximate lookup.

    Vectors are bucketed on a coarse grid and compared with a tolerance
    relative to their size; a lookup also probes adjacent buckets for
    coordinates near a bucket boundary, so two copies of a vector that
    differ by accumulated round-off always match.
    """

    def __init__(self, quantum: float = KEY_QUANTUM, bucket: float = 1e-4):
        self.quantum = quantum
        self.bucket = bucket
        self._cells: dict[tuple, list[tuple[int, np.ndarray]]] = {}

    def _probe_keys(self, v):
        s = np.asarray(v) / self.bucket
        base = np.rint(s)
        frac = s - base
        key = tuple(base.astype(np.int64).tolist())
        if not np.any(np.abs(frac) > 0.4):
            return [key]
        options = [
            (int(b), int(b + np.sign(f))) if abs(f) > 0.4 else (int(b),)
            for b, f in zip(base, frac)
        ]
        return [tuple(c) for c in product(*options)]

    def find(self, v) -> int | None:
        v = np.asarray(v, dtype=float)
        tol = self.quantum * max(1.0, float(np.abs(v).max()))
        for key in self._probe_keys(v):
            for ident, w in self._cells.get(key, ()):
                if np.max(np.abs(w - v)) < tol:
                    return ident
        return None

    def add(self, v, ident: int) -> None:
        key = tuple(int(c) for c in np.rint(np.asarray(v) / self.bucket))
        self._cells.setdefault(key, []).append((ident, np.array(v, dtype=float)))


def _hyperplane_sort_key(v: np.ndarray):
    dist = math.asinh(v[2])
    angle = math.atan2(v[1], v[0])
    qa = round(angle / 1e-9)
    if qa <= round(-math.pi / 1e-9):
        qa = round(math.pi / 1e-9)
    return (round(dist / 1e-9), qa) + tuple(int(c) for c in np.rint(v / KEY_QUANTUM))


class TilingAtlas:
    """Finite truncation of the {p,4} tiling around the seed tile."""

    def __init__(
        self,
        template: PolytopeTemplate,
        tiles: list[Tile],
        hyperplanes: list[hb.Hyperplane],
        delta: float,
        epsilon: float,
        generations: int,
        core_tile_ids: list[int],
    ):
        self.template = template
        self.tiles = tiles
        self.hyperplanes = hyperplanes
        self.delta = float(delta)
        self.epsilon = float(epsilon)
        self.generations = int(generations)
        self.core_tile_ids = list(core_tile_ids)
        p = template.p

        self.hyper_normals = np.array([h.normal for h in hyperplanes]).reshape(-1, 3)
        self.tile_matrix = np.array([t.isometry.matrix for t in tiles])
        self.tile_inverse = hb.lorentz_inverse(self.tile_matrix)
        self.tile_incentre = np.array([t.incentre for t in tiles])
        self.tile_faces = np.array([t.face_hyperplanes for t in tiles], dtype=int).reshape(-1, p)
        self.generation = np.array([t.generation for t in tiles], dtype=int)
        fn = self.hyper_normals[self.tile_faces]                       # (T, p, 3)
        ip = hb.minkowski_form(self.tile_incentre[:, None, :], fn)
        #: tile lies in the origin-side half-space H+ of its face hyperplane
        self.tile_face_plus = ip < 0
        self.tile_outward = np.where(self.tile_face_plus[..., None], fn, -fn)
        self.is_core = np.zeros(len(tiles), dtype=bool)
        self.is_core[np.asarray(self.core_tile_ids, dtype=int) - 1] = True

        self._index = _PointIndex()
        for i, c in enumerate(self.tile_incentre):
            self._index.add(c, i)
        self._build_vertex_incidence()
        longest = max((len(t.word) for t in tiles), default=0)
        self.word_table = np.full((len(tiles), longest), -1, dtype=int)
        for i, t in enumerate(tiles):
            self.word_table[i, : len(t.word)] = t.word

    # ------------------------------------------------------------------ basics
    @property
    def p(self) -> int:
        return self.template.p

    @property
    def net(self) -> np.ndarray:
        """Tile incentres, index-aligned with ``tiles`` (net point of tile id k is net[k-1])."""
        return self.tile_incentre

    def __len__(self) -> int:
        return len(self.tiles)

    def tile(self, tile_id: int) -> Tile:
        if not 1 <= tile_id <= len(self.tiles):
            raise InvalidArgument(f"no tile with id {tile_id}")
        return self.tiles[tile_id - 1]

    def find_tile(self, incentre) -> int | None:
        """Index (0-based) of the tile with the given incentre, or None."""
        return self._index.find(np.asarray(incentre, dtype=float))

    def _build_vertex_incidence(self):
        verts = np.einsum("tij,kj->tki", self.tile_matrix, self.template.vertices)
        index = _PointIndex()
        incident: list[list[int]] = []
        tile_vertex = np.empty(verts.shape[:2], dtype=int)
        for t in range(verts.shape[0]):
            for k in range(verts.shape[1]):
                vid = index.find(verts[t, k])
                if vid is None:
                    vid = len(incident)
                    index.add(verts[t, k], vid)
                    incident.append([])
                incident[vid].append(t)
                tile_vertex[t, k] = vid
        self.tile_vertices = verts
        self.tile_vertex_ids = tile_vertex
        self.vertex_incidence = incident
        touching = []
        for t in range(verts.shape[0]):
            s = set()
            for vid in tile_vertex[t]:
                s.update(incident[vid])
            touching.append(sorted(s))
        self.touching = touching
        width = max(len(s) for s in touching)
        star = np.full((len(touching), width), -1, dtype=int)
        for t, s in enumerate(touching):
            star[t, : len(s)] = s
        #: tiles whose closure meets tile t (including t itself), 0-based, -1 padded
        self.star = star

    # ------------------------------------------------------------- geometry
    @cached_property
    def coverage_radius(self) -> float:
        """Radius of the largest origin-centred ball covered by the atlas tiles."""
        refl = self.template.reflections
        p = self.p
        words = np.array(
            [refl[j] for j in range(p)] + [refl[j] @ refl[(j + 1) % p] for j in range(p)]
        )
        cand = np.einsum("rij,wjk->rwik", self.tile_matrix, words).reshape(-1, 3, 3)
        missing = [i for i, m in enumerate(cand) if self.find_tile(m[:, 2]) is None]
        if not missing:
            return math.inf
        origin_in_template = hb.lorentz_inverse(cand[missing])[:, :, 2]
        return float(self.template.distance(origin_in_template).min())

    @property
    def diameter(self) -> float:
        return self.template.diameter

    def tile_polytope(self, tile_id: int) -> hb.ConvexPolytope:
        return hb.ConvexPolytope(self.tile_outward[tile_id - 1])

    def distance_to_tiles(self, x, tile_idx):
        """dist(x_i, P_{t_i}) for points x (N, 3) and 0-based tile indices (N,)."""
        y = np.einsum("nij,nj->ni", self.tile_inverse[tile_idx], x)
        return self.template.distance(y)

    def to_local(self, x, tile_idx):
        """Template coordinates M_t^{-1} x, obtained by unwinding the tile word.

        Applying the word's template reflections one at a time keeps every
        intermediate product small, which is far more accurate than
        multiplying by the stored inverse of a distant tile.
        """
        y = np.array(np.atleast_2d(x), dtype=np.longdouble)
        words = self.word_table[np.asarray(tile_idx, dtype=int)]
        refl = self.template.extended_reflections
        for step in range(words.shape[1]):
            rows = np.flatnonzero(words[:, step] >= 0)
            if not len(rows):
                break
            y[rows] = np.einsum("nij,nj->ni", refl[words[rows, step]], y[rows])
        return y.astype(float)

    def to_world(self, y, tile_idx):
        """World coordinates M_t y of template coordinates y (the inverse of :meth:`to_local`)."""
        x = np.array(np.atleast_2d(y), dtype=np.longdouble)
        words = self.word_table[np.asarray(tile_idx, dtype=int)]
        refl = self.template.extended_reflections
        for step in range(words.shape[1] - 1, -1, -1):
            rows = np.flatnonzero(words[:, step] >= 0)
            if len(rows):
                x[rows] = np.einsum("nij,nj->ni", refl[words[rows, step]], x[rows])
        return x.astype(float)

    @cached_property
    def star_frames(self) -> np.ndarray:
        """(T, S, 3, 3) maps from the frame of tile t to the frames of its star tiles.

        M_n^{-1} M_t for a tile n meeting t is one of the template words
        I, R_j or R_j R_{j+1}; the exact template product is stored rather
        than the product of two large tile matrices.
        """
        refl = self.template.reflections
        p = self.p
        words = [np.eye(3)] + [refl[j] for j in range(p)]
        words += [refl[j] @ refl[(j + 1) % p] for j in range(p)]
        words = np.array(words)
        inverse_words = hb.lorentz_inverse(words)
        star = self.star
        valid = star >= 0
        out = np.zeros(star.shape + (3, 3))
        rows, cols = np.nonzero(valid)
        rel = np.einsum("nij,njk->nik", self.tile_inverse[rows], self.tile_matrix[star[rows, cols]])
        scale = np.abs(self.tile_matrix[rows]).max(axis=(1, 2)) ** 2
        gap = np.abs(rel[:, None] - words[None]).max(axis=(2, 3)) / scale[:, None]
        best = np.argmin(gap, axis=1)
        if len(best) and gap[np.arange(len(best)), best].max() > 1e-6:
            raise InvalidArgument("a star tile is not a face or vertex neighbour")
        out[rows, cols] = inverse_words[best]
        return out

    def star_distances(self, x, tile_idx):
        """(N, S) distances from x_i to the star tiles of t_i (inf on padding)."""
        return self.star_distances_local(self.to_local(x, tile_idx), tile_idx)

    def star_distances_local(self, y, tile_idx):
        """As :meth:`star_distances` for template coordinates y in tiles t."""
        tile_idx = np.asarray(tile_idx, dtype=int)
        y = np.atleast_2d(y)
        cand = self.star[tile_idx]
        valid = cand >= 0
        frames = self.star_frames[tile_idx][valid]
        rows = np.nonzero(valid)[0]
        out = np.full(cand.shape, np.inf)
        out[valid] = self.template.distance(np.einsum("nij,nj->ni", frames, y[rows]))
        return out

    def inside_tiles(self, x, tile_idx, strict: bool = True):
        """Whether x_i lies in the interior (or closure) of tile t_i."""
        ip = np.einsum("nkj,nj->nk", self.tile_outward[tile_idx] * hb.signature(3), x)
        return np.all(ip < 0, axis=1) if strict else np.all(ip <= 1e-12, axis=1)

    # -------------------------------------------------------------- location
    def locate(self, x, *, strict: bool = True):
        """Vectorized point location by folding into the seed tile.

        Each point is repeatedly reflected across the seed face it violates
        most until it lies in the seed; the accumulated reflections identify
        the tile.  Returns ``(tile_idx, interior)`` with 0-based indices; with
        ``strict=False`` unlocated points get index -1 instead of raising.
        """
        x = np.atleast_2d(np.asarray(x, dtype=float))
        n = len(x)
        y = x.copy()
        q = np.broadcast_to(np.eye(3), (n, 3, 3)).copy()
        normals = self.template.face_normals
        jn = normals * hb.signature(3)
        refl = self.template.reflections
        budget = 4 * (self.generations + 2) + 32
        active = np.arange(n)
        for _ in range(budget):
            ip = y[active] @ jn.T
            worst = np.argmax(ip, axis=1)
            bad = ip[np.arange(len(active)), worst] > 1e-14 * np.abs(y[active]).max(axis=1)
            if not bad.any():
                active = active[:0]
                break
            active = active[bad]
            f = worst[bad]
            y[active] = hb.reflect_points(y[active], normals[f])
            q[active] = np.einsum("nij,njk->nik", refl[f], q[active])
        if len(active):
            if strict:
                raise OutOfAtlasError(f"{len(active)} point(s) could not be folded into the seed")
        centres = hb.lorentz_inverse(q)[:, :, 2]
        idx = np.full(n, -1, dtype=int)
        folded_ok = np.ones(n, dtype=bool)
        folded_ok[active] = False
        for i in np.flatnonzero(folded_ok):
            hit = self.find_tile(centres[i])
            if hit is not None:
                idx[i] = hit
        if strict and np.any(idx < 0):
            raise OutOfAtlasError(f"{int(np.sum(idx < 0))} point(s) lie outside the atlas")
        interior = np.min(np.abs(y @ jn.T), axis=1) > math.sinh(1e-9)
        return idx, interior

    def locate_nearest(self, x):
        """Point location by nearest net point (the tiles are Dirichlet domains)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.argmax(hb.minkowski_form(x[:, None, :], self.tile_incentre[None, :, :]), axis=1)

    # ------------------------------------------------------------ near faces
    def near_faces(self, x, tile_idx, width: float | None = None, *, local=None):
        """Face positions of the given tiles lying within ``width`` of each point.

        ``width`` defaults to epsilon.  Returns an (N, 2) array of face
        positions (0..p-1) padded with -1; at most d = 2 faces of a tile can
        be that close to a point, and they are adjacent, hence orthogonal.
        ``local`` may pass precomputed template coordinates of x.
        """
        width = self.epsilon if width is None else width
        y = self.to_local(x, tile_idx) if local is None else local
        ip = y @ (self.template.face_normals * hb.signature(3)).T
        near = np.abs(ip) < math.sinh(width)
        if np.any(near.sum(axis=1) > 2):
            raise InvalidArgument("more than d hyperplanes within epsilon of a point")
        pos = np.where(near, np.arange(self.p), self.p)
        pos = np.sort(pos, axis=1)[:, :2]
        return np.where(pos == self.p, -1, pos)

    @cached_property
    def face_neighbor(self) -> np.ndarray:
        """(T, p) 0-based index of the tile across each face, -1 if not enumerated."""
        refl = self.template.reflections
        out = np.full((len(self.tiles), self.p), -1, dtype=int)
        cand = np.einsum("tij,pjk->tpik", self.tile_matrix, refl)[..., 2]
        for t in range(len(self.tiles)):
            for j in range(self.p):
                hit = self.find_tile(cand[t, j])
                if hit is not None:
                    out[t, j] = hit
        return out


def _tile_hyperplane_normals(matrix: np.ndarray, template: PolytopeTemplate) -> np.ndarray:
    w = template.extended_normals @ np.asarray(matrix, dtype=np.longdouble).T
    w = w / np.sqrt((w * w * np.array([1, 1, -1], dtype=w.dtype)).sum(axis=1))[:, None]
    return np.where(w[:, 2:3] < 0, -w, w)


def enumerate_tiling(
    template: PolytopeTemplate,
    generations: int,
    *,
    max_tiles: int = DEFAULT_MAX_TILES,
    face_order=None,
) -> TilingAtlas:
    """Breadth-first enumeration of the tiles up to word length ``generations``."""
    if generations < 0:
        raise InvalidArgument("generations must be >= 0")
    p = template.p
    order = list(range(p)) if face_order is None else [int(j) for j in face_order]
    if sorted(order) != list(range(p)):
        raise InvalidArgument("face_order must be a permutation of the face indices")
    refl = template.extended_reflections

    words: list[tuple[int, ...]] = [()]
    mats = [np.eye(3, dtype=np.longdouble)]
    gens = [0]
    index = _PointIndex()
    index.add(mats[0][:, 2], 0)
    frontier = [0]
    for g in range(1, generations + 1):
        nxt = []
        for t in frontier:
            cand = mats[t] @ refl                                            # (p, 3, 3)
            for j in order:
                c = cand[j][:, 2].astype(float)
                if index.find(c) is not None:
                    continue
                new = len(mats)
                if new >= max_tiles:
                    raise ResourceLimitError(
                        f"tile count exceeds the cap of {max_tiles} at generation {g}"
                    )
                index.add(c, new)
                mats.append(cand[j])
                words.append(words[t] + (j,))
                gens.append(g)
                nxt.append(new)
        frontier = nxt

    # face hyperplanes, deduplicated then ordered
    hindex = _PointIndex()
    raw: list[np.ndarray] = []
    tile_raw_faces = []
    for m in mats:
        ids = []
        for v in _tile_hyperplane_normals(m, template).astype(float):
            h = hindex.find(v)
            if h is None:
                h = len(raw)
                hindex.add(v, h)
                raw.append(v)
            ids.append(h)
        tile_raw_faces.append(ids)
    order_h = sorted(range(len(raw)), key=lambda i: _hyperplane_sort_key(raw[i]))
    rank = np.empty(len(raw), dtype=int)
    rank[order_h] = np.arange(len(raw))
    hyperplanes = [hb.Hyperplane(raw[i], k) for k, i in enumerate(order_h)]

    tiles = []
    for t, m in enumerate(mats):
        neighbors = []
        for j in range(p):
            hit = index.find((m @ refl[j])[:, 2].astype(float))
            if hit is not None:
                neighbors.append(hit + 1)
        tiles.append(
            Tile(
                id=t + 1,
                word=words[t],
                isometry=hb.LorentzIsometry(m.astype(float)),
                incentre=m[:, 2].astype(float),
                face_hyperplanes=[int(rank[h]) for h in tile_raw_faces[t]],
                neighbors=neighbors,
                generation=gens[t],
            )
        )
    delta = template.inradius
    epsilon = EPSILON_MARGIN * min(delta, template.nonadjacent_face_gap / 2.0)
    core = [t.id for t in tiles if t.generation <= generations - 2]
    return TilingAtlas(template, tiles, hyperplanes, delta, epsilon, generations, core)


def word_matrix(template: PolytopeTemplate, word) -> np.ndarray:
    """Product R_{w_1} ... R_{w_k} of template face reflections."""
    m = np.eye(3, dtype=np.longdouble)
    for j in word:
        m = m @ template.extended_reflections[j]
    return m.astype(float)


def locate_tile(atlas: TilingAtlas, x) -> tuple[int, bool]:
    """Tile id whose closure contains x, and whether x is interior to it."""
    idx, interior = atlas.locate(np.asarray(x, dtype=float)[None, :])
    return int(idx[0]) + 1, bool(interior[0])


def closed_star(atlas: TilingAtlas, tile_id: int = 1) -> list[int]:
    """Ids of the tiles whose closure meets the given tile (the tile included)."""
    return [t + 1 for t in atlas.touching[tile_id - 1]]


def neighbor_count(atlas: TilingAtlas, tile_id: int) -> int:
    """Number of other tiles whose closure meets the tile's closure."""
    t = atlas.tile(tile_id)
    if not atlas.is_core[t.id - 1]:
        raise BoundaryTruncationError(f"tile {tile_id} is not a core tile")
    return len(atlas.touching[tile_id - 1]) - 1


def vertex_incidences(atlas: TilingAtlas, tile_ids=None) -> dict[int, int]:
    """Number of incident tiles for every vertex of the given tiles (default: core)."""
    tile_ids = atlas.core_tile_ids if tile_ids is None else tile_ids
    out = {}
    for tid in tile_ids:
        for vid in atlas.tile_vertex_ids[tid - 1]:
            out[int(vid)] = len(atlas.vertex_incidence[vid])
    return out


def hyperplane_closure_check(atlas: TilingAtlas, face_index: int) -> dict:
    """Check that reflecting across a seed face maps atlas hyperplanes to atlas hyperplanes.

    Only hyperplanes whose closest point to the origin is within the
    coverage radius minus one tile diameter are checked; beyond that the
    image may legitimately fall outside the truncation.
    """
    if not 0 <= face_index < atlas.p:
        raise InvalidArgument(f"face index {face_index} out of range")
    seed_h = atlas.tile_faces[0, face_index]
    r = hb.reflection_matrix(atlas.hyper_normals[seed_h])
    index = _PointIndex()
    for k, v in enumerate(atlas.hyper_normals):
        index.add(v, k)
    radius = atlas.coverage_radius - atlas.diameter
    dist = np.arcsinh(atlas.hyper_normals[:, 2])
    checked = np.flatnonzero(dist <= radius)
    misses = []
    worst = 0.0
    for k in checked:
        w = r @ atlas.hyper_normals[k]
        w = w / math.sqrt(hb.minkowski_form(w, w))
        if w[2] < 0:
            w = -w
        hit = index.find(w)
        if hit is None:
            misses.append(int(k))
        else:
            worst = max(worst, float(np.abs(atlas.hyper_normals[hit] - w).max()))
    return {
        "face_index": face_index,
        "reflection_hyperplane": int(seed_h),
        "radius": radius,
        "checked": int(len(checked)),
        "misses": misses,
        "max_key_error": worst,
    }


def orthogonality_census(atlas: TilingAtlas, radius: float | None = None) -> dict:
    """Scan every pair of atlas hyperplanes meeting inside the covered region."""
    radius = atlas.coverage_radius if radius is None else radius
    near = np.flatnonzero(np.arcsinh(atlas.hyper_normals[:, 2]) <= radius)
    v = atlas.hyper_normals[near]
    j = hb.signature(3)
    gram = (v * j) @ v.T
    iu, ju = np.triu_indices(len(v), k=1)
    g = gram[iu, ju]
    meets = np.abs(g) < 1.0 - 1e-12
    iu, ju, g = iu[meets], ju[meets], g[meets]
    w = j * np.cross(v[iu], v[ju])
    w = w / np.sqrt(-hb.minkowski_form(w, w))[:, None]
    w = np.where(w[:, 2:3] < 0, -w, w)
    inside = np.arccosh(np.maximum(w[:, 2], 1.0)) <= radius
    iu, ju, g, w = iu[inside], ju[inside], g[inside], w[inside]
    r1 = np.array([hb.reflection_matrix(a) for a in v[iu]]).reshape(-1, 3, 3)
    r2 = np.array([hb.reflection_matrix(b) for b in v[ju]]).reshape(-1, 3, 3)
    r12 = r1 @ r2
    # matrix entries grow like e^{2 dist}; defects are measured relative to them
    scale = np.abs(r1).max(axis=(1, 2)) * np.abs(r2).max(axis=(1, 2)) if len(iu) else np.ones(0)
    comm = np.abs(r12 - r2 @ r1).max(axis=(1, 2)) / scale if len(iu) else np.zeros(0)
    prefl = np.array([hb.point_reflection_matrix(x) for x in w]).reshape(-1, 3, 3)
    pdef = np.abs(r12 - prefl).max(axis=(1, 2)) / scale if len(iu) else np.zeros(0)
    fixed = np.abs(np.einsum("nij,nj->ni", r12, w) - w).max(axis=1) / scale if len(iu) else np.zeros(0)
    bad = (np.abs(g) > 1e-10) | (comm > 1e-10) | (pdef > 1e-10) | (fixed > 1e-10)
    return {
        "radius": radius,
        "pairs": int(len(iu)),
        "max_abs_product": float(np.abs(g).max()) if len(g) else 0.0,
        "max_commutator": float(comm.max()) if len(comm) else 0.0,
        "max_point_reflection_defect": float(pdef.max()) if len(pdef) else 0.0,
        "max_fixed_point_defect": float(fixed.max()) if len(fixed) else 0.0,
        "violations": [(int(near[a]), int(near[b])) for a, b in zip(iu[bad], ju[bad])],
    }


def subatlas(atlas: TilingAtlas, tile_ids) -> TilingAtlas:
    """Atlas made of the given tiles only (renumbered in the given order).

    Hyperplanes not supporting any kept tile are dropped; the remaining
    ones keep their relative order.  No tile of a proper sub-atlas is
    treated as core.
    """
    tile_ids = [int(t) for t in tile_ids]
    if not tile_ids or tile_ids[0] != 1:
        raise InvalidArgument("a sub-atlas must start with the seed tile")
    old = [atlas.tile(t) for t in tile_ids]
    used = sorted({h for t in old for h in t.face_hyperplanes})
    remap = {h: k for k, h in enumerate(used)}
    new_id = {t: k + 1 for k, t in enumerate(tile_ids)}
    tiles = [
        Tile(
            id=new_id[t.id],
            word=t.word,
            isometry=t.isometry,
            incentre=t.incentre,
            face_hyperplanes=[remap[h] for h in t.face_hyperplanes],
            neighbors=[new_id[n] for n in t.neighbors if n in new_id],
            generation=t.generation,
        )
        for t in old
    ]
    hyperplanes = [hb.Hyperplane(atlas.hyper_normals[h], k) for k, h in enumerate(used)]
    core = atlas.core_tile_ids if len(set(tile_ids)) == len(atlas) else []
    return TilingAtlas(
        atlas.template, tiles, hyperplanes, atlas.delta, atlas.epsilon, atlas.generations,
        sorted(new_id[t] for t in core),
    )
