"""Sampled lower bounds for Lipschitz constants over tiles."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import hyperbolic as hb
from ..tiling import TilingAtlas
from .decomposition import TileFunctionSeq
from .fields import ScalarField

LOCAL_SHARE = 0.7


@dataclass(frozen=True)
class LipschitzEstimate:
    value: float
    pairs: int
    local_pairs: int

    def __float__(self) -> float:
        return self.value


@dataclass(frozen=True)
class TileRegion:
    """Union of tiles (1-based ids) of an atlas."""

    atlas: TilingAtlas
    tile_ids: tuple

    @classmethod
    def core(cls, atlas: TilingAtlas) -> "TileRegion":
        return cls(atlas, tuple(atlas.core_tile_ids))


def sample_template(template, n: int, rng: np.random.Generator) -> np.ndarray:
    """n points in the template polygon, uniform in Klein coordinates."""
    reach = math.tanh(template.circumradius)
    out = []
    have = 0
    while have < n:
        k = rng.uniform(-reach, reach, size=(2 * n + 16, 2))
        k = k[np.sum(k * k, axis=1) < reach * reach]
        y = hb.from_beltrami_klein(k)
        y = y[np.all(hb.minkowski_form(y[:, None, :], template.face_normals[None]) < 0, axis=1)]
        out.append(y)
        have += len(y)
    return np.concatenate(out)[:n]


def sample_in_tiles(atlas: TilingAtlas, tile_ids, n: int, rng: np.random.Generator):
    """n points spread over the given tiles; returns (points, 0-based tile indices)."""
    idx = np.asarray(tile_ids, dtype=int)[rng.integers(0, len(tile_ids), size=n)] - 1
    y = sample_template(atlas.template, n, rng)
    return np.einsum("nij,nj->ni", atlas.tile_matrix[idx], y), idx


def _nearby(x, radius, rng):
    """Points at random directions and distances in (0, radius] from x."""
    u = rng.normal(size=x.shape)
    u = u + hb.minkowski_form(u, x)[:, None] * x
    u = u / np.sqrt(hb.minkowski_form(u, u))[:, None]
    r = radius * (1.0 - rng.uniform(size=len(x)))
    return np.cosh(r)[:, None] * x + np.sinh(r)[:, None] * u


def local_pairs(atlas: TilingAtlas, tile_ids, n: int, rng: np.random.Generator):
    """Up to n pairs (x, y, tile) with both points in the same tile, at most delta apart."""
    x, t = sample_in_tiles(atlas, tile_ids, n, rng)
    y = x
    radius = np.full(n, atlas.delta)
    pending = np.arange(n)
    for _ in range(8):
        cand = _nearby(x[pending], radius[pending], rng)
        inside = atlas.inside_tiles(cand, t[pending])
        y = y.copy()
        y[pending[inside]] = cand[inside]
        pending = pending[~inside]
        radius[pending] *= 0.5
        if not len(pending):
            break
    keep = np.setdiff1d(np.arange(n), pending)
    return x[keep], y[keep], t[keep]


def estimate_lipschitz(field, region: TileRegion, samples: int = 2000, seed: int = 0) -> LipschitzEstimate:
    """max |f(x) - f(y)| / rho(x, y) over stratified sample pairs.

    70% of the pairs are local (same tile, distance at most delta), the
    rest are spread over the region.  A :class:`TileFunctionSeq` is
    treated tile by tile, so all its pairs lie in a common tile.
    """
    atlas = region.atlas
    rng = np.random.default_rng(seed)
    per_tile = isinstance(field, TileFunctionSeq)
    if per_tile:
        evaluate = field.evaluate
    else:
        def evaluate(t, x):
            return field.evaluate_on_tiles(x, t)

    n_local = int(round(LOCAL_SHARE * samples))
    x, y, t = local_pairs(atlas, region.tile_ids, n_local, rng)
    keep = np.arange(len(x))
    xs, ys, ts_x, ts_y = [x], [y], [t], [t]

    n_global = samples - n_local
    a, ta = sample_in_tiles(atlas, region.tile_ids, n_global, rng)
    if per_tile:
        b = np.einsum("nij,nj->ni", atlas.tile_matrix[ta], sample_template(atlas.template, n_global, rng))
        tb = ta
    else:
        b, tb = sample_in_tiles(atlas, region.tile_ids, n_global, rng)
    xs.append(a)
    ys.append(b)
    ts_x.append(ta)
    ts_y.append(tb)
    x, y = np.concatenate(xs), np.concatenate(ys)
    tx, ty = np.concatenate(ts_x), np.concatenate(ts_y)
    d = hb.distance(x, y)
    ok = d > 1e-9
    fx = evaluate(tx[ok], x[ok])
    fy = evaluate(ty[ok], y[ok])
    ratio = np.abs(fx - fy) / d[ok]
    return LipschitzEstimate(float(ratio.max()) if len(ratio) else 0.0, int(ok.sum()), len(keep))


def estimate_partition_lipschitz(pou, samples: int = 2000, seed: int = 0) -> LipschitzEstimate:
    """Sampled L_N: the largest Lip(phi_n) seen over same-tile pairs in the core.

    Each phi_n is Lipschitz on every tile and the tiles are convex, so
    pairs inside a common tile already see the global constant.
    """
    atlas = pou.atlas
    rng = np.random.default_rng(seed)
    x, y, t = local_pairs(atlas, atlas.core_tile_ids, samples, rng)
    d = hb.distance(x, y)
    ok = d > 1e-9
    _, phi_x = pou.weights(x[ok], t[ok])
    _, phi_y = pou.weights(y[ok], t[ok])
    ratio = np.abs(phi_x - phi_y).max(axis=1) / d[ok]
    return LipschitzEstimate(float(ratio.max()) if len(ratio) else 0.0, int(ok.sum()), int(ok.sum()))
