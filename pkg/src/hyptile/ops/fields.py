"""Scalar fields on the hyperbolic plane as lazily evaluated trees.

Every field is evaluated on batches of hyperboloid points of shape (N, 3).
Fields whose value depends on which tile a point is attributed to (this
matters only on tile boundaries) accept an optional array of 0-based tile
indices through :meth:`ScalarField.evaluate_on_tiles`.  Points may also
be given as template coordinates inside a tile (:meth:`evaluate_local`),
which avoids the round-off of large world coordinates far from the origin.
"""

from __future__ import annotations

import numpy as np

from .. import hyperbolic as hb
from ..errors import InvalidArgument


class ScalarField:
    """Base class: a real function on (part of) the hyperbolic plane."""

    name = "field"

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1, x.shape[-1])
        return self.evaluate(flat).reshape(x.shape[:-1])

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        return self.evaluate_on_tiles(x, None)

    def evaluate_on_tiles(self, x: np.ndarray, tile_idx) -> np.ndarray:
        raise NotImplementedError

    def evaluate_local(self, atlas, y: np.ndarray, tile_idx) -> np.ndarray:
        """Values at the points M_t y given by template coordinates y in tiles t."""
        return self.evaluate_on_tiles(atlas.to_world(y, tile_idx), tile_idx)

    def __add__(self, other: "ScalarField") -> "ScalarField":
        return LinearCombination([(1.0, self), (1.0, other)])

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        return LinearCombination([(1.0, self), (-1.0, other)])

    def __neg__(self) -> "ScalarField":
        return LinearCombination([(-1.0, self)])

    def __mul__(self, c: float) -> "ScalarField":
        if not np.isscalar(c):
            raise InvalidArgument("fields can only be scaled by real numbers")
        return LinearCombination([(float(c), self)])

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.name}>"


class FunctionField(ScalarField):
    """Wraps a vectorized callable ``fn(x: (N, 3)) -> (N,)``."""

    def __init__(self, fn, name: str = "function"):
        self.fn = fn
        self.name = name

    def evaluate_on_tiles(self, x, tile_idx):
        return np.asarray(self.fn(x), dtype=float)


class ConstantField(ScalarField):
    def __init__(self, value: float = 0.0):
        self.value = float(value)
        self.name = f"const({self.value!r})"

    def evaluate_on_tiles(self, x, tile_idx):
        return np.full(len(x), self.value)


ZERO = ConstantField(0.0)


class LinearCombination(ScalarField):
    def __init__(self, terms):
        flat = []
        for c, f in terms:
            if isinstance(f, LinearCombination):
                flat.extend((c * cc, ff) for cc, ff in f.terms)
            else:
                flat.append((float(c), f))
        self.terms = flat
        self.name = " + ".join(f"{c!r}*{f.name}" for c, f in flat)

    def evaluate_on_tiles(self, x, tile_idx):
        out = np.zeros(len(x))
        for c, f in self.terms:
            if c != 0.0:
                out += c * f.evaluate_on_tiles(x, tile_idx)
        return out

    def evaluate_local(self, atlas, y, tile_idx):
        out = np.zeros(len(y))
        for c, f in self.terms:
            if c != 0.0:
                out += c * f.evaluate_local(atlas, y, tile_idx)
        return out


class ComposedField(ScalarField):
    """``outer(inner(x))`` for a vectorized real function ``outer``."""

    def __init__(self, outer, inner: ScalarField, name: str):
        self.outer = outer
        self.inner = inner
        self.name = name

    def evaluate_on_tiles(self, x, tile_idx):
        return self.outer(self.inner.evaluate_on_tiles(x, tile_idx))

    def evaluate_local(self, atlas, y, tile_idx):
        return self.outer(self.inner.evaluate_local(atlas, y, tile_idx))


class ShiftedField(ScalarField):
    """``f - f(origin)``, turning any field into one based at the origin."""

    def __init__(self, field: ScalarField):
        self.field = field
        self.offset = float(field.evaluate_on_tiles(hb.origin(2)[None, :], np.zeros(1, dtype=int))[0])
        self.name = f"{field.name} - f(o)"

    def evaluate_on_tiles(self, x, tile_idx):
        return self.field.evaluate_on_tiles(x, tile_idx) - self.offset

    def evaluate_local(self, atlas, y, tile_idx):
        return self.field.evaluate_local(atlas, y, tile_idx) - self.offset


def distance_from_origin() -> ScalarField:
    return FunctionField(lambda x: np.arccosh(np.maximum(x[:, -1], 1.0)), "dist-origin")


def klein_coordinate(axis: int) -> ScalarField:
    label = "xy"[axis]
    return FunctionField(lambda x: x[:, axis] / x[:, -1], f"bk-{label}")


class TileBump(ScalarField):
    """Tent on one tile: distance to its boundary inside it, zero outside."""

    def __init__(self, atlas, tile_id: int):
        atlas.tile(tile_id)
        self.atlas = atlas
        self.index = tile_id - 1
        self.name = f"bump:{tile_id}"

    def _tent(self, y):
        ip = y @ (self.atlas.template.face_normals * hb.signature(3)).T
        inside = ip.max(axis=1) < 0
        return np.where(inside, np.arcsinh(np.maximum(-ip, 0.0)).min(axis=1), 0.0)

    def evaluate_on_tiles(self, x, tile_idx):
        return self._tent(self.atlas.to_local(x, np.full(len(x), self.index)))

    def evaluate_local(self, atlas, y, tile_idx):
        own = np.asarray(tile_idx) == self.index
        if atlas is self.atlas and np.all(own):
            return self._tent(y)
        return self.evaluate_on_tiles(atlas.to_world(y, tile_idx), tile_idx)


def tile_bump(atlas, tile_id: int) -> ScalarField:
    return TileBump(atlas, tile_id)
