"""SVG drawings of an atlas in the Poincare or Klein disk."""

from __future__ import annotations

import numpy as np

from . import hyperbolic as hb
from .errors import InvalidArgument
from .tiling import TilingAtlas

MODELS = {"poincare": hb.to_poincare, "klein": hb.to_beltrami_klein}
STROKE = 0.004


def _fmt(v: float) -> str:
    s = f"{v:.6f}"
    return "0.000000" if s == "-0.000000" else s


def tile_outline(atlas: TilingAtlas, tile_idx: int, model: str = "poincare", segments: int = 32) -> np.ndarray:
    """Closed polyline (p * segments, 2) of a tile boundary in disk coordinates."""
    if model not in MODELS:
        raise InvalidArgument(f"unknown model {model!r}; choose from {sorted(MODELS)}")
    if segments < 1:
        raise InvalidArgument("segments must be positive")
    verts = atlas.tile_vertices[tile_idx]
    ts = np.arange(segments) / segments
    pts = np.concatenate(
        [hb.geodesic_points(verts[k], verts[(k + 1) % atlas.p], ts) for k in range(atlas.p)]
    )
    return MODELS[model](pts)


def render_svg(atlas: TilingAtlas, model: str = "poincare", segments: int = 32) -> str:
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<svg xmlns="http://www.w3.org/2000/svg" viewBox="-1.05 -1.05 2.1 2.1" width="800" height="800">',
        f'<g transform="scale(1,-1)" fill="none" stroke="black" stroke-width="{STROKE}">',
        '<circle cx="0" cy="0" r="1" stroke="gray"/>',
    ]
    for t in range(len(atlas)):
        poly = tile_outline(atlas, t, model, segments)
        coords = " L ".join(f"{_fmt(x)} {_fmt(y)}" for x, y in poly)
        lines.append(f'<path data-tile="{t + 1}" d="M {coords} Z"/>')
    lines += ["</g>", "</svg>", ""]
    return "\n".join(lines)
