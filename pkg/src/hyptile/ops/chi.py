"""Cutoffs psi_k and the reflection operators chi_k.

(chi_k g)(x) = g(x) - psi_k(x) g(R_k x) on the origin side H_k+ of H_k and
g(x) on the other side; the inverse uses ``+``.  Two evaluators are
provided.  :class:`ChiSweep` applies a list of operators literally, one
hyperplane at a time.  :func:`leaf_expansion` exploits that at most two
mutually orthogonal tiling hyperplanes come within epsilon of a point, so
any sweep collapses to at most four reflected evaluations.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .. import hyperbolic as hb
from ..errors import InvalidArgument, OutOfAtlasError
from ..tiling import TilingAtlas
from .fields import FunctionField, ScalarField


def cutoff_values(ip, epsilon: float):
    """psi as a function of the Minkowski product <x, v> with the unit normal."""
    return np.maximum(1.0 - np.arcsinh(np.abs(ip)) / epsilon, 0.0)


def cutoff_psi(atlas: TilingAtlas, k: int) -> ScalarField:
    v = _normal(atlas, k)
    eps = atlas.epsilon
    return FunctionField(lambda x: cutoff_values(hb.minkowski_form(x, v), eps), f"psi_{k}")


def chi_norm_estimate(atlas: TilingAtlas) -> float:
    """Upper bound for the norm of a single chi_k on tile-wise Lip_0 functions.

    Product rule on g - psi (g o R): Lip(g) + Lip(g o R) + Lip(psi) sup|g|,
    with Lip(psi) <= 1/eps and sup|g| <= diam(P) Lip(g) on a tile.
    """
    return 2.0 + atlas.diameter / atlas.epsilon


def _normal(atlas: TilingAtlas, k: int) -> np.ndarray:
    if not 0 <= k < len(atlas.hyperplanes):
        raise InvalidArgument(f"hyperplane index {k} out of range")
    return atlas.hyper_normals[k]


class ChiField(ScalarField):
    """chi_k g (or its inverse), evaluated with the pointwise side of H_k."""

    def __init__(self, atlas: TilingAtlas, k: int, base: ScalarField, inverse: bool = False):
        self.atlas = atlas
        self.k = k
        self.normal = _normal(atlas, k)
        self.base = base
        self.sign = 1.0 if inverse else -1.0
        self.name = f"chi{'^-1' if inverse else ''}_{k}({base.name})"

    def evaluate_on_tiles(self, x, tile_idx):
        ip = hb.minkowski_form(x, self.normal)
        w = np.where(ip <= 0, cutoff_values(ip, self.atlas.epsilon), 0.0)
        out = self.base.evaluate_on_tiles(x, tile_idx)
        rows = np.flatnonzero(w > 0)
        if len(rows):
            y = hb.reflect_points(x[rows], self.normal)
            out[rows] += self.sign * w[rows] * self.base.evaluate(y)
        return out


def chi(atlas: TilingAtlas, k: int, g: ScalarField, inverse: bool = False) -> ScalarField:
    return ChiField(atlas, k, g, inverse)


class ChiSweep(ScalarField):
    """Literal composition of chi operators over a list of hyperplanes.

    ``order`` lists the operators in application order (innermost first):
    ``[0, 1, ..., n]`` is chi_n o ... o chi_0.  Sides are taken pointwise,
    so this evaluator is meant for points off the hyperplanes.
    """

    def __init__(self, atlas: TilingAtlas, order, base: ScalarField, inverse: bool = False):
        self.atlas = atlas
        self.order = [int(k) for k in order]
        for k in self.order:
            _normal(atlas, k)
        self.base = base
        self.sign = 1.0 if inverse else -1.0
        self.name = f"sweep[{len(self.order)}]({base.name})"

    def evaluate_on_tiles(self, x, tile_idx):
        pts = np.array(x, dtype=float)
        coef = np.ones(len(pts))
        owner = np.arange(len(pts))
        eps = self.atlas.epsilon
        j = hb.signature(3)
        reach = math.sinh(eps)
        normals = self.atlas.hyper_normals
        for k in reversed(self.order):
            v = normals[k]
            ip = pts @ (j * v)
            hit = np.flatnonzero((ip <= 0) & (ip > -reach))
            if not len(hit):
                continue
            w = cutoff_values(ip[hit], eps)
            pts = np.concatenate([pts, hb.reflect_points(pts[hit], v)])
            coef = np.concatenate([coef, self.sign * w * coef[hit]])
            owner = np.concatenate([owner, owner[hit]])
        vals = self.base.evaluate(pts)
        return np.bincount(owner, weights=coef * vals, minlength=len(x))


class Leaves(NamedTuple):
    points: np.ndarray
    weights: np.ndarray
    tiles: np.ndarray
    positions: np.ndarray
    local: np.ndarray


def leaf_expansion(atlas: TilingAtlas, x, tile_idx, *, local=None) -> Leaves:
    """Reflected copies of x needed by any chi sweep on the tiles ``tile_idx``.

    * ``positions`` (N, 2): face positions of the tile within epsilon of x
      (-1 padded), the only hyperplanes whose operators act near x;
    * ``weights`` (N, 2): psi_k(x) when the tile lies on the origin side of
      H_k, else 0 (the operator is the identity there);
    * ``points`` (N, 4, 3): x, R_0 x, R_1 x, R_1 R_0 x;
    * ``tiles`` (N, 4): 0-based tiles containing those images (the images
      of the given tile), -1 when not enumerated;
    * ``local`` (N, 3): template coordinates of x, shared by every image.

    The tile across face j of M_t P is M_t R_j P, so reflecting x across
    that face leaves its template coordinates unchanged in the frame of
    the image tile.  The side of each hyperplane is read off the tile rather
    than the point, which gives the one-sided limits from the tile interior
    on its faces.  ``x`` may be None when ``local`` is given.
    """
    t = np.asarray(tile_idx, dtype=int)
    y = atlas.to_local(x, t) if local is None else np.atleast_2d(local)
    pos = atlas.near_faces(None, t, local=y)
    valid = pos >= 0
    p0 = np.maximum(pos, 0)
    plus = atlas.tile_face_plus[t[:, None], p0]
    normals = atlas.template.face_normals[p0]
    ip = np.einsum("nkj,nj->nk", normals * hb.signature(3), y)
    w = np.where(valid & plus, cutoff_values(ip, atlas.epsilon), 0.0)
    nb = atlas.face_neighbor
    lt0 = nb[t, p0[:, 0]]
    lt1 = nb[t, p0[:, 1]]
    lt01 = np.where(lt0 >= 0, nb[np.maximum(lt0, 0), p0[:, 1]], -1)
    leaf = np.stack([t, lt0, lt1, lt01], axis=1)
    frames = atlas.tile_matrix[np.maximum(leaf, 0)]
    pts = np.einsum("nlij,nj->nli", frames, y)
    if x is not None:
        pts[:, 0] = x
    return Leaves(pts, w, leaf, pos, y)


def subset_coefficients(w, sign: float, mask=None):
    """Coefficients of the four leaves: 1, s w_0, s w_1, w_0 w_1 (times masks)."""
    c = np.stack([np.ones(len(w)), sign * w[:, 0], sign * w[:, 1], w[:, 0] * w[:, 1]], axis=1)
    return c if mask is None else c * mask


def evaluate_leaves(field_eval, leaves: Leaves, coef):
    """sum over leaves of coef * value, evaluating only leaves with coef != 0.

    ``field_eval(local, tiles)`` receives template coordinates and the leaf
    tiles and must return one value per leaf.
    """
    leaf = leaves.tiles
    live = coef != 0
    if np.any(leaf[live] < 0):
        raise OutOfAtlasError("a reflected evaluation point falls outside the atlas")
    rows, cols = np.nonzero(live)
    vals = np.zeros(coef.shape)
    if len(rows):
        vals[rows, cols] = field_eval(leaves.local[rows], leaf[rows, cols])
    return (coef * vals).sum(axis=1)
