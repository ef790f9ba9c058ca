"""Partition of unity subordinate to the tiles and the extension E_N from the net."""

from __future__ import annotations

import numpy as np

from ..errors import InvalidArgument, OutOfAtlasError, OutOfCoreError
from ..tiling import TilingAtlas
from .fields import ScalarField


class PartitionOfUnity:
    """phi_n = rho_n / sum_k rho_k with rho_n(x) = max(1 - dist(x, P_n) / delta, 0).

    Only tiles meeting the tile that contains ``x`` can have rho_n(x) > 0,
    so the sum runs over that tile's closed star.  For core tiles the star
    is complete and the truncated sum equals the infinite one.
    """

    def __init__(self, atlas: TilingAtlas):
        self.atlas = atlas
        self.delta = atlas.delta
        if atlas.template.nonadjacent_face_gap < self.delta:
            raise InvalidArgument("tiles outside a closed star may come within delta of the tile")

    def _tiles_for(self, x, tile_idx, strict):
        atlas = self.atlas
        if tile_idx is None:
            tile_idx, _ = atlas.locate(x, strict=False)
            lost = tile_idx < 0
            if np.any(lost):
                if strict:
                    raise OutOfAtlasError(f"{int(lost.sum())} point(s) lie outside the atlas")
                tile_idx = tile_idx.copy()
                tile_idx[lost] = atlas.locate_nearest(x[lost])
        tile_idx = np.asarray(tile_idx, dtype=int)
        if strict and not np.all(atlas.is_core[tile_idx]):
            raise OutOfCoreError("partition of unity evaluated outside the core tiles")
        return tile_idx

    def weights(self, x, tile_idx=None, *, strict: bool = False):
        """Candidate tiles (N, S) (0-based, -1 padded) and the matching phi values."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        tile_idx = self._tiles_for(x, tile_idx, strict)
        return self.weights_local(self.atlas.to_local(x, tile_idx), tile_idx)

    def weights_local(self, y, tile_idx, *, strict: bool = False):
        """:meth:`weights` for template coordinates y in the tiles ``tile_idx``."""
        tile_idx = np.asarray(tile_idx, dtype=int)
        if strict and not np.all(self.atlas.is_core[tile_idx]):
            raise OutOfCoreError("partition of unity evaluated outside the core tiles")
        cand = self.atlas.star[tile_idx]
        dist = self.atlas.star_distances_local(y, tile_idx)
        rho = np.maximum(1.0 - dist / self.delta, 0.0)
        return cand, rho / rho.sum(axis=1, keepdims=True)

    def phi(self, tile_id: int, x, *, strict: bool = False):
        """Values of phi_{tile_id} at the points x."""
        cand, phi = self.weights(x, strict=strict)
        return np.where(cand == tile_id - 1, phi, 0.0).sum(axis=1)

    def field(self, tile_id: int) -> ScalarField:
        pou = self

        class _Phi(ScalarField):
            name = f"phi_{tile_id}"

            def evaluate_on_tiles(self, x, tile_idx):
                cand, phi = pou.weights(x, tile_idx)
                return np.where(cand == tile_id - 1, phi, 0.0).sum(axis=1)

            def evaluate_local(self, atlas, y, tile_idx):
                cand, phi = pou.weights_local(y, tile_idx)
                return np.where(cand == tile_id - 1, phi, 0.0).sum(axis=1)

        return _Phi()

    def bound_constant(self, lipschitz_witness: float) -> float:
        """C = 2 diam(P) L_N (neighbour count) from the net extension estimate."""
        neighbours = max(len(s) - 1 for s in self.atlas.touching)
        return 2.0 * self.atlas.diameter * lipschitz_witness * neighbours


def partition_of_unity(atlas: TilingAtlas) -> PartitionOfUnity:
    return PartitionOfUnity(atlas)


class NetFunction:
    """Values on the net, index-aligned with the atlas tiles; tile 1 carries 0."""

    def __init__(self, atlas: TilingAtlas, values, *, require_zero_at_seed: bool = True):
        values = np.asarray(values, dtype=float)
        if values.shape != (len(atlas),):
            raise InvalidArgument(f"expected {len(atlas)} net values, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise InvalidArgument("net values must be finite")
        if require_zero_at_seed and values[0] != 0.0:
            raise InvalidArgument("a net function must vanish at the seed incentre")
        self.atlas = atlas
        self.values = values

    @classmethod
    def from_mapping(cls, atlas: TilingAtlas, mapping: dict) -> "NetFunction":
        missing = [t.id for t in atlas.tiles if t.id not in mapping]
        if missing:
            raise InvalidArgument(f"missing net values for tiles {missing[:5]}")
        return cls(atlas, [mapping[t.id] for t in atlas.tiles])

    @classmethod
    def restrict(cls, atlas: TilingAtlas, field: ScalarField) -> "NetFunction":
        """Restriction of a field to the net points."""
        vals = field.evaluate_on_tiles(atlas.net, np.arange(len(atlas)))
        return cls(atlas, vals, require_zero_at_seed=False)

    @classmethod
    def zero(cls, atlas: TilingAtlas) -> "NetFunction":
        return cls(atlas, np.zeros(len(atlas)))

    def __getitem__(self, tile_id: int) -> float:
        return float(self.values[tile_id - 1])

    def lipschitz(self, tile_ids=None) -> float:
        """Exact Lipschitz constant of the net function over the given tiles."""
        from .. import hyperbolic as hb

        ids = np.arange(len(self.values)) if tile_ids is None else np.asarray(tile_ids) - 1
        pts = self.atlas.net[ids]
        d = hb.pairwise_distance(pts, pts)
        dv = np.abs(self.values[ids][:, None] - self.values[ids][None, :])
        np.fill_diagonal(d, np.inf)
        return float((dv / d).max()) if len(ids) > 1 else 0.0


class NetExtension(ScalarField):
    """E_N f = sum_n f(p_n) phi_n."""

    def __init__(self, pou: PartitionOfUnity, net: NetFunction):
        if net.atlas is not pou.atlas:
            raise InvalidArgument("net function and partition of unity use different atlases")
        self.pou = pou
        self.net = net
        self.name = "E_N(f)"

    def evaluate_on_tiles(self, x, tile_idx):
        return self._combine(*self.pou.weights(x, tile_idx))

    def evaluate_local(self, atlas, y, tile_idx):
        if atlas is not self.pou.atlas:
            return super().evaluate_local(atlas, y, tile_idx)
        return self._combine(*self.pou.weights_local(y, tile_idx))

    def _combine(self, cand, phi):
        vals = np.where(cand >= 0, self.net.values[np.maximum(cand, 0)], 0.0)
        return (phi * vals).sum(axis=1)


def extend_from_net(atlas: TilingAtlas, net: NetFunction, pou: PartitionOfUnity | None = None):
    if net.atlas is not atlas:
        raise InvalidArgument("net function belongs to a different atlas")
    return NetExtension(pou or PartitionOfUnity(atlas), net)
