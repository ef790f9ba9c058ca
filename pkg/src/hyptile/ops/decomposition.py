"""Decomposition of a field into tile pieces (Phi), tile extensions E_m and Psi."""

from __future__ import annotations

import numpy as np

from .. import hyperbolic as hb
from ..errors import BoundaryTruncationError, InvalidArgument
from ..tiling import TilingAtlas
from .chi import evaluate_leaves, leaf_expansion, subset_coefficients
from .fields import ScalarField
from .partition import NetFunction, PartitionOfUnity, extend_from_net

EXTENSION_MODES = ("faces", "full", "all")


# ---------------------------------------------------------------- S_m sets
def vanishing_mask(atlas: TilingAtlas) -> np.ndarray:
    """(T, p) flags: face j of tile t lies in S_t (tile on the origin side of it)."""
    return atlas.tile_face_plus


def _require_core(atlas: TilingAtlas, tile_id: int):
    atlas.tile(tile_id)
    if not atlas.is_core[tile_id - 1]:
        raise BoundaryTruncationError(f"tile {tile_id} is not a core tile")


def compute_S(atlas: TilingAtlas, tile_id: int) -> list[tuple[int, int]]:
    """Faces of P_m contained in S_m as (hyperplane index, face position) pairs."""
    _require_core(atlas, tile_id)
    t = tile_id - 1
    return [
        (int(atlas.tile_faces[t, j]), j) for j in range(atlas.p) if atlas.tile_face_plus[t, j]
    ]


def invisible_faces(atlas: TilingAtlas, tile_id: int, step: float = 1e-6) -> list[int]:
    """Face positions of P_m hidden from the origin, found by ray casting.

    A face is hidden when the geodesic from the origin to its midpoint
    runs through the interior of P_m just before reaching the face.
    """
    _require_core(atlas, tile_id)
    t = tile_id - 1
    verts = atlas.tile_vertices[t]
    o = hb.origin(2)
    hidden = []
    for j in range(atlas.p):
        mid = hb.geodesic_point(verts[j], verts[(j + 1) % atlas.p], 0.5)
        length = float(hb.distance(o, mid))
        probe = hb.geodesic_point(o, mid, 1.0 - step / length)
        if atlas.inside_tiles(probe[None, :], np.array([t]))[0]:
            hidden.append(j)
    return hidden


def allowed_faces(atlas: TilingAtlas, mode: str = "full") -> np.ndarray:
    """(T, p) flags of the face hyperplanes whose inverse operators E_m applies.

    ``faces``: the faces not in S_m; ``full``: every hyperplane index up to
    the largest such face; ``all``: every hyperplane.
    """
    if mode not in EXTENSION_MODES:
        raise InvalidArgument(f"unknown extension mode {mode!r}")
    visible = ~atlas.tile_face_plus
    if mode == "faces":
        return visible
    if mode == "all":
        return np.ones_like(visible)
    top = np.where(visible, atlas.tile_faces, -1).max(axis=1)
    return atlas.tile_faces <= top[:, None]


# -------------------------------------------------------- tile sequences
class TileFunctionSeq:
    """A family (g_m) of functions on the tiles, evaluated in batches.

    ``evaluate(tile_idx, x)`` returns g_{t_i + 1}(x_i) for 0-based tile
    indices; points are assumed to lie in the closure of their tile.
    ``fn(tile_idx, points)`` receives world points, or template coordinates
    when ``local`` is set.
    """

    def __init__(self, atlas: TilingAtlas, fn, name: str = "sequence", lipschitz_witness=None, *, local=False):
        self.atlas = atlas
        self._fn = fn
        self._local = local
        self.name = name
        self.lipschitz_witness = lipschitz_witness

    def evaluate(self, tile_idx, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        tile_idx = np.broadcast_to(np.asarray(tile_idx, dtype=int), (len(x),))
        if self._local:
            return self.evaluate_local(tile_idx, self.atlas.to_local(x, tile_idx))
        return np.asarray(self._fn(tile_idx, x), dtype=float)

    def evaluate_local(self, tile_idx, y) -> np.ndarray:
        """g_{t_i + 1} at the points with template coordinates y_i in tile t_i."""
        y = np.atleast_2d(np.asarray(y, dtype=float))
        tile_idx = np.broadcast_to(np.asarray(tile_idx, dtype=int), (len(y),))
        if not self._local:
            return np.asarray(self._fn(tile_idx, self.atlas.to_world(y, tile_idx)), dtype=float)
        return np.asarray(self._fn(tile_idx, y), dtype=float)

    def vanishing_set(self, tile_id: int):
        return compute_S(self.atlas, tile_id)

    def component(self, tile_id: int) -> ScalarField:
        seq = self
        m = tile_id - 1

        class _Component(ScalarField):
            name = f"{seq.name}[{tile_id}]"

            def evaluate_on_tiles(self, x, tile_idx):
                return seq.evaluate(np.full(len(x), m), x)

            def evaluate_local(self, atlas, y, tile_idx):
                tile_idx = np.asarray(tile_idx, dtype=int)
                if atlas is seq.atlas and np.all(tile_idx == m):
                    return seq.evaluate_local(tile_idx, y)
                return self.evaluate_on_tiles(atlas.to_world(y, tile_idx), tile_idx)

        return _Component()

    def __add__(self, other: "TileFunctionSeq") -> "TileFunctionSeq":
        return TileFunctionSeq(
            self.atlas, lambda t, y: self.evaluate_local(t, y) + other.evaluate_local(t, y), "sum", local=True
        )

    def __mul__(self, c: float) -> "TileFunctionSeq":
        return TileFunctionSeq(self.atlas, lambda t, y: c * self.evaluate_local(t, y), "scaled", local=True)

    __rmul__ = __mul__


class PhiSequence(TileFunctionSeq):
    """Phi(g)_m = chi_{1..N_m}(g) on P_m, through the local leaf expansion."""

    def __init__(self, atlas: TilingAtlas, base: ScalarField):
        super().__init__(atlas, self._evaluate, f"Phi({base.name})", local=True)
        self.base = base

    def _evaluate(self, tile_idx, y):
        leaves = leaf_expansion(self.atlas, None, tile_idx, local=y)
        coef = subset_coefficients(leaves.weights, -1.0)
        atlas = self.atlas
        return evaluate_leaves(lambda yy, tt: self.base.evaluate_local(atlas, yy, tt), leaves, coef)


def decompose(
    atlas: TilingAtlas,
    g: ScalarField,
    subtract_net: bool = True,
    *,
    pou: PartitionOfUnity | None = None,
    origin_tol: float = 1e-12,
):
    """Split g into its net values and the tile sequence Phi(g - E_N(g|_N)).

    With ``subtract_net=False`` (the bounded-function variant) g is used as
    it is and the returned net function is ``None``.
    """
    if subtract_net:
        g0 = float(g.evaluate_on_tiles(hb.origin(2)[None, :], np.zeros(1, dtype=int))[0])
        if abs(g0) > origin_tol:
            raise InvalidArgument(f"field must vanish at the origin (got {g0!r})")
        pou = pou or PartitionOfUnity(atlas)
        raw = NetFunction.restrict(atlas, g)
        net = NetFunction(atlas, np.where(np.arange(len(atlas)) == 0, 0.0, raw.values))
        base = g - extend_from_net(atlas, net, pou)
    else:
        net = None
        base = g
    return net, PhiSequence(atlas, base)


# ------------------------------------------------------------ extensions
class TileExtension(ScalarField):
    """E_m h: the continuous extension of the inverse sweep applied to h on P_m."""

    def __init__(self, atlas: TilingAtlas, tile_id: int, h: ScalarField, mode: str = "full"):
        atlas.tile(tile_id)
        self.atlas = atlas
        self.tile_id = tile_id
        self.h = h
        self.mode = mode
        self.allowed = allowed_faces(atlas, mode)[tile_id - 1]
        self.name = f"E_{tile_id}({h.name})"

    def evaluate_on_tiles(self, x, tile_idx):
        if tile_idx is None:
            tile_idx, _ = self.atlas.locate(x)
        return self.evaluate_local(self.atlas, self.atlas.to_local(x, tile_idx), tile_idx)

    def evaluate_local(self, atlas, y, tile_idx):
        if atlas is not self.atlas:
            return super().evaluate_local(atlas, y, tile_idx)
        leaves = leaf_expansion(atlas, None, np.asarray(tile_idx, dtype=int), local=y)
        pos = leaves.positions
        ok = np.where(pos >= 0, self.allowed[np.maximum(pos, 0)], False)
        coef = subset_coefficients(leaves.weights * ok, 1.0) * (leaves.tiles == self.tile_id - 1)
        h = self.h
        return evaluate_leaves(lambda yy, tt: h.evaluate_local(atlas, yy, tt), leaves, coef)


def extend_from_tile(
    atlas: TilingAtlas,
    tile_id: int,
    h: ScalarField,
    mode: str = "full",
    *,
    check: bool = True,
    samples_per_face: int = 32,
    tol: float = 1e-9,
) -> TileExtension:
    """E_m h for a function h on P_m vanishing on S_m and at p_m."""
    if check:
        t = tile_id - 1
        atlas.tile(tile_id)
        pts = [atlas.net[t][None, :]]
        verts = atlas.tile_vertices[t]
        ts = np.linspace(0.0, 1.0, samples_per_face)
        for j in range(atlas.p):
            if atlas.tile_face_plus[t, j]:
                pts.append(hb.geodesic_points(verts[j], verts[(j + 1) % atlas.p], ts))
        pts = np.concatenate(pts)
        vals = h.evaluate_on_tiles(pts, np.full(len(pts), t))
        if abs(vals[0]) > tol or np.max(np.abs(vals)) > tol:
            raise InvalidArgument(
                f"h must vanish on S_{tile_id} and at its net point (max |h| = {np.max(np.abs(vals)):.3e})"
            )
    return TileExtension(atlas, tile_id, h, mode)


class Reconstruction(ScalarField):
    """Psi((h_m)) + E_N(net): the pointwise sum of the tile extensions."""

    def __init__(self, atlas, net: NetFunction | None, seq: TileFunctionSeq, mode="full", pou=None):
        self.atlas = atlas
        self.seq = seq
        self.mode = mode
        self.allowed = allowed_faces(atlas, mode)
        self.net_part = extend_from_net(atlas, net, pou) if net is not None else None
        self.name = f"Psi({seq.name})"

    def evaluate_on_tiles(self, x, tile_idx):
        if tile_idx is None:
            tile_idx, _ = self.atlas.locate(x)
        return self.evaluate_local(self.atlas, self.atlas.to_local(x, tile_idx), tile_idx)

    def evaluate_local(self, atlas, y, tile_idx):
        if atlas is not self.atlas:
            return super().evaluate_local(atlas, y, tile_idx)
        tile_idx = np.asarray(tile_idx, dtype=int)
        leaves = leaf_expansion(atlas, None, tile_idx, local=y)
        w, leaf, pos = leaves.weights, leaves.tiles, leaves.positions
        pos0 = np.maximum(pos, 0)
        valid = pos >= 0
        leaf0 = np.maximum(leaf, 0)
        # operator k in subset A must be part of E_{m_A}'s sweep
        ok0 = valid[:, 0] & self.allowed[leaf0, pos0[:, [0]]].T
        ok1 = valid[:, 1] & self.allowed[leaf0, pos0[:, [1]]].T
        mask = np.stack(
            [np.ones(len(y)), ok0[1], ok1[2], ok0[3] & ok1[3]], axis=1
        ).astype(float)
        coef = subset_coefficients(w, 1.0, mask)
        out = evaluate_leaves(lambda yy, tt: self.seq.evaluate_local(tt, yy), leaves, coef)
        if self.net_part is not None:
            out = out + self.net_part.evaluate_local(atlas, y, tile_idx)
        return out


def reconstruct(atlas: TilingAtlas, net: NetFunction | None, seq: TileFunctionSeq, mode="full", pou=None):
    if seq.atlas is not atlas or (net is not None and net.atlas is not atlas):
        raise InvalidArgument("inputs were built on a different atlas")
    return Reconstruction(atlas, net, seq, mode, pou)


def literal_reconstruction(atlas, net, seq, tile_ids, mode="full", pou=None) -> ScalarField:
    """sum over the given tiles of E_m h_m (+ E_N(net)), one extension at a time."""
    terms = [TileExtension(atlas, m, seq.component(m), mode) for m in tile_ids]
    net_part = extend_from_net(atlas, net, pou) if net is not None else None

    class _Sum(ScalarField):
        name = "sum E_m h_m"

        def evaluate_on_tiles(self, x, tile_idx):
            if tile_idx is None:
                tile_idx, _ = atlas.locate(x)
            return self.evaluate_local(atlas, atlas.to_local(x, tile_idx), tile_idx)

        def evaluate_local(self, at, y, tile_idx):
            out = sum(e.evaluate_local(at, y, tile_idx) for e in terms)
            if net_part is not None:
                out = out + net_part.evaluate_local(at, y, tile_idx)
            return out

    return _Sum()


# ---------------------------------------------------- sample sequences
def random_admissible_sequence(atlas: TilingAtlas, seed: int = 0, scale: float = 1.0) -> TileFunctionSeq:
    """Pseudorandom tile functions vanishing at every p_m and on every S_m.

    h_m(y) = a_m (b_m . k(y)) prod_{j in S_m} tanh(dist(y, face j)), in
    template coordinates y with Klein coordinates k(y).
    """
    rng = np.random.default_rng(seed)
    a = scale * rng.uniform(0.5, 1.5, len(atlas))
    b = rng.normal(size=(len(atlas), 2))
    normals = atlas.template.face_normals * hb.signature(3)
    smask = atlas.tile_face_plus

    def fn(t, y):
        lin = (b[t] * (y[:, :2] / y[:, 2:3])).sum(axis=1)
        damp = np.where(smask[t], np.tanh(np.arcsinh(np.abs(y @ normals.T))), 1.0)
        return a[t] * lin * damp.prod(axis=1)

    return TileFunctionSeq(atlas, fn, f"admissible(seed={seed})", local=True)
