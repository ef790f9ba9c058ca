"""JSON files for atlases and decompositions.

Floats are written with ``repr`` (shortest round-trip form), so loading
reproduces every stored double exactly.  Files are replaced atomically.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile

import numpy as np

from . import hyperbolic as hb
from .errors import InvalidArgument
from .tiling import Tile, TilingAtlas, build_template

FORMAT_VERSION = "1.0"
TOLERANCES = {"point": hb.POINT_TOL, "isometry": hb.ISOMETRY_TOL, "identity": 1e-9, "key": 1e-7}


def _floats(a) -> list:
    return [float(v) for v in np.asarray(a, dtype=float).ravel()]


def dumps(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True, allow_nan=False) + "\n"


def write_atomic(path, text: str) -> None:
    path = os.fspath(path)
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _check_version(doc: dict, kind: str) -> None:
    if not isinstance(doc, dict) or doc.get("kind") != kind:
        raise InvalidArgument(f"not a {kind} file")
    version = str(doc.get("format_version", ""))
    if version.split(".")[0] != FORMAT_VERSION.split(".")[0]:
        raise InvalidArgument(f"unsupported {kind} format version {version!r}")


# ------------------------------------------------------------------ atlas
def atlas_to_dict(atlas: TilingAtlas) -> dict:
    return {
        "kind": "atlas",
        "format_version": FORMAT_VERSION,
        "header": {
            "p": atlas.p,
            "generations": atlas.generations,
            "delta": atlas.delta,
            "epsilon": atlas.epsilon,
            "tolerances": TOLERANCES,
        },
        "hyperplanes": [_floats(v) for v in atlas.hyper_normals],
        "tiles": [
            {
                "id": t.id,
                "word": list(t.word),
                "matrix": _floats(t.isometry.matrix),
                "incentre": _floats(t.incentre),
                "faces": list(t.face_hyperplanes),
                "neighbors": list(t.neighbors),
                "generation": t.generation,
            }
            for t in atlas.tiles
        ],
        "core_tile_ids": list(atlas.core_tile_ids),
    }


def atlas_from_dict(doc: dict) -> TilingAtlas:
    _check_version(doc, "atlas")
    try:
        head = doc["header"]
        template = build_template(int(head["p"]))
        hyperplanes = [hb.Hyperplane(np.array(v), k) for k, v in enumerate(doc["hyperplanes"])]
        tiles = [
            Tile(
                id=int(t["id"]),
                word=tuple(int(j) for j in t["word"]),
                isometry=hb.LorentzIsometry(np.array(t["matrix"]).reshape(3, 3)),
                incentre=np.array(t["incentre"], dtype=float),
                face_hyperplanes=[int(h) for h in t["faces"]],
                neighbors=[int(n) for n in t["neighbors"]],
                generation=int(t["generation"]),
            )
            for t in doc["tiles"]
        ]
        return TilingAtlas(
            template,
            tiles,
            hyperplanes,
            float(head["delta"]),
            float(head["epsilon"]),
            int(head["generations"]),
            [int(c) for c in doc["core_tile_ids"]],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidArgument(f"malformed atlas file: {exc}") from exc


def atlas_text(atlas: TilingAtlas) -> str:
    return dumps(atlas_to_dict(atlas))


def atlas_digest(atlas: TilingAtlas) -> str:
    return hashlib.sha256(atlas_text(atlas).encode()).hexdigest()


def save_atlas(atlas: TilingAtlas, path) -> str:
    text = atlas_text(atlas)
    write_atomic(path, text)
    return hashlib.sha256(text.encode()).hexdigest()


def _read_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise InvalidArgument(f"{path}: not valid JSON ({exc})") from exc


def load_atlas(path) -> TilingAtlas:
    return atlas_from_dict(_read_json(path))


# ---------------------------------------------------------- decomposition
def template_grid(atlas: TilingAtlas, resolution: int) -> np.ndarray:
    """Points of a resolution x resolution Klein grid lying inside the template."""
    if resolution < 2:
        raise InvalidArgument("grid resolution must be at least 2")
    reach = float(np.tanh(atlas.template.circumradius))
    ticks = np.linspace(-reach, reach, resolution)
    k = np.stack(np.meshgrid(ticks, ticks, indexing="ij"), axis=-1).reshape(-1, 2)
    k = k[np.sum(k * k, axis=1) < reach * reach]
    y = hb.from_beltrami_klein(k)
    inside = np.all(hb.minkowski_form(y[:, None, :], atlas.template.face_normals[None]) <= 0, axis=1)
    return y[inside]


def decomposition_grids(atlas: TilingAtlas, seq, resolution: int, tile_ids=None) -> dict[int, np.ndarray]:
    y = template_grid(atlas, resolution)
    tile_ids = atlas.core_tile_ids if tile_ids is None else tile_ids
    out = {}
    for m in tile_ids:
        x = y @ atlas.tile_matrix[m - 1].T
        out[m] = seq.evaluate(np.full(len(x), m - 1), x)
    return out


def decomposition_to_dict(atlas, field_name, subtract_net, net, grids, resolution) -> dict:
    return {
        "kind": "decomposition",
        "format_version": FORMAT_VERSION,
        "atlas_digest": atlas_digest(atlas),
        "field": {"name": field_name, "subtract_net": bool(subtract_net)},
        "grid_resolution": int(resolution),
        "net_values": None if net is None else _floats(net.values),
        "tiles": [{"id": int(m), "values": _floats(v)} for m, v in sorted(grids.items())],
    }


def save_decomposition(path, atlas, field_name, subtract_net, net, grids, resolution) -> None:
    write_atomic(path, dumps(decomposition_to_dict(atlas, field_name, subtract_net, net, grids, resolution)))


def load_decomposition(path, atlas: TilingAtlas) -> dict:
    doc = _read_json(path)
    _check_version(doc, "decomposition")
    if doc.get("atlas_digest") != atlas_digest(atlas):
        raise InvalidArgument("decomposition was computed on a different atlas")
    return doc
