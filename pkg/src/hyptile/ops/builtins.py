"""Named built-in fields used by the command line and the acceptance runs."""

from __future__ import annotations

import numpy as np

from ..errors import InvalidArgument
from ..tiling import TilingAtlas
from .fields import ComposedField, ShiftedField, distance_from_origin, klein_coordinate, tile_bump
from .partition import NetFunction, extend_from_net

FIELD_NAMES = ("dist-origin", "bump:<tile>", "bk-x", "bk-y", "netinterp:<seed>", "tanh-bk-x")


def random_net_function(atlas: TilingAtlas, seed: int) -> NetFunction:
    rng = np.random.default_rng(seed)
    values = rng.normal(size=len(atlas))
    values[0] = 0.0
    return NetFunction(atlas, values)


def builtin_field(name: str, atlas: TilingAtlas, *, based: bool = True):
    """Field called ``name``; with ``based`` it is shifted to vanish at the origin."""
    head, _, arg = name.partition(":")
    if head == "dist-origin" and not arg:
        field = distance_from_origin()
    elif head in ("bk-x", "bk-y") and not arg:
        field = klein_coordinate(0 if head == "bk-x" else 1)
    elif head == "tanh-bk-x" and not arg:
        field = ComposedField(np.tanh, klein_coordinate(0), "tanh-bk-x")
    elif head == "bump" and arg.isdigit():
        tile_id = int(arg)
        if not 1 <= tile_id <= len(atlas):
            raise InvalidArgument(f"bump tile {tile_id} is not in the atlas")
        field = tile_bump(atlas, tile_id)
    elif head == "netinterp" and arg.isdigit():
        field = extend_from_net(atlas, random_net_function(atlas, int(arg)))
        field.name = name
    else:
        raise InvalidArgument(f"unknown field {name!r}; known fields: {', '.join(FIELD_NAMES)}")
    if based:
        shifted = ShiftedField(field)
        if shifted.offset != 0.0:
            shifted.name = name
            return shifted
    return field
