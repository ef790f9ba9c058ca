"""Command line: tile, render, decompose, reconstruct, verify.

Exit codes: 0 success, 1 failed checks, 2 usage errors, 3 resource limits.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import io
from . import tiling as tl
from .errors import HypTileError, InvalidArgument, ResourceLimitError
from .ops import decomposition as dec
from .ops.builtins import FIELD_NAMES, builtin_field
from .ops.chi import chi_norm_estimate
from .ops.estimate import TileRegion, estimate_lipschitz, sample_in_tiles
from .render import MODELS, render_svg
from .verify import SUITES, run_verification

EXIT_OK, EXIT_CHECKS, EXIT_USAGE, EXIT_RESOURCE = 0, 1, 2, 3


def _bool(text: str) -> bool:
    low = text.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected true or false, got {text!r}")


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hyptile", description="Right-angled hyperbolic tilings and Lipschitz decompositions.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tile", help="enumerate a {p,4} tiling and write an atlas file")
    p.add_argument("--p", type=int, required=True, help="number of polygon sides (>= 5)")
    p.add_argument("--generations", type=int, default=2, help="breadth-first depth")
    p.add_argument("--star", action="store_true", help="keep only the seed tile and the tiles meeting it")
    p.add_argument("--max-tiles", type=int, default=tl.DEFAULT_MAX_TILES)
    p.add_argument("--out", required=True)

    p = sub.add_parser("render", help="draw an atlas as SVG")
    p.add_argument("--atlas", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--model", choices=sorted(MODELS), default="poincare")
    p.add_argument("--segments", type=int, default=32)

    p = sub.add_parser("decompose", help="decompose a built-in field into tile pieces")
    p.add_argument("--atlas", required=True)
    p.add_argument("--field", required=True, help="one of: " + ", ".join(FIELD_NAMES))
    p.add_argument("--subtract-net", type=_bool, default=True)
    p.add_argument("--grid", type=int, default=16)
    p.add_argument("--samples", type=int, default=2000, help="pairs for Lipschitz estimates")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("reconstruct", help="rebuild a decomposition and report round-trip residuals")
    p.add_argument("--atlas", required=True)
    p.add_argument("--decomposition", required=True)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tolerance", type=_positive_float, default=1e-9)

    p = sub.add_parser("verify", help="run invariant suites on an atlas")
    p.add_argument("--atlas", required=True)
    p.add_argument("--suite", choices=SUITES + ("all",), default="all")
    p.add_argument("--tolerance", type=_positive_float, default=1e-9)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", help="also write the report as JSON to this path")
    return parser


def cmd_tile(args, out) -> int:
    if args.generations < 0:
        raise InvalidArgument("--generations must be >= 0")
    template = tl.build_template(args.p)
    generations = max(args.generations, 2) if args.star else args.generations
    atlas = tl.enumerate_tiling(template, generations, max_tiles=args.max_tiles)
    if args.star:
        atlas = tl.subatlas(atlas, tl.closed_star(atlas, 1))
    io.save_atlas(atlas, args.out)
    print(f"tiles: {len(atlas)}", file=out)
    print(f"hyperplanes: {len(atlas.hyperplanes)}", file=out)
    print(f"core tiles: {len(atlas.core_tile_ids)}", file=out)
    print(f"delta: {atlas.delta!r}", file=out)
    print(f"epsilon: {atlas.epsilon!r}", file=out)
    print(f"coverage radius: {atlas.coverage_radius!r}", file=out)
    return EXIT_OK


def cmd_render(args, out) -> int:
    atlas = io.load_atlas(args.atlas)
    svg = render_svg(atlas, args.model, args.segments)
    io.write_atomic(args.out, svg)
    print(f"rendered {len(atlas)} tiles to {args.out}", file=out)
    return EXIT_OK


def cmd_decompose(args, out) -> int:
    atlas = io.load_atlas(args.atlas)
    if not atlas.core_tile_ids:
        raise InvalidArgument("the atlas has no core tiles; use at least 2 generations")
    field = builtin_field(args.field, atlas, based=args.subtract_net)
    net, seq = dec.decompose(atlas, field, args.subtract_net)
    grids = io.decomposition_grids(atlas, seq, args.grid)
    io.save_decomposition(args.out, atlas, args.field, args.subtract_net, net, grids, args.grid)
    region = TileRegion.core(atlas)
    lip_pieces = estimate_lipschitz(seq, region, args.samples, args.seed).value
    lip_g = estimate_lipschitz(seq.base, region, args.samples, args.seed).value
    bound = chi_norm_estimate(atlas) ** atlas.template.face_count
    print(f"core tiles: {len(grids)}", file=out)
    print(f"max sampled Lip(g_m): {lip_pieces!r}", file=out)
    print(f"sampled Lip(g): {lip_g!r}", file=out)
    print(f"formula bound: {bound * lip_g!r}", file=out)
    return EXIT_OK


def cmd_reconstruct(args, out) -> int:
    atlas = io.load_atlas(args.atlas)
    doc = io.load_decomposition(args.decomposition, atlas)
    name, subtract = doc["field"]["name"], doc["field"]["subtract_net"]
    field = builtin_field(name, atlas, based=subtract)
    net, seq = dec.decompose(atlas, field, subtract)
    stored = {t["id"]: np.array(t["values"]) for t in doc["tiles"]}
    fresh = io.decomposition_grids(atlas, seq, doc["grid_resolution"], sorted(stored))
    grid_gap = max(float(np.abs(fresh[m] - stored[m]).max()) for m in stored) if stored else 0.0
    net_gap = 0.0
    if doc["net_values"] is not None:
        net_gap = float(np.abs(np.array(doc["net_values"]) - net.values).max())
    psi = dec.reconstruct(atlas, net, seq)
    rng = np.random.default_rng(args.seed)
    x, t = sample_in_tiles(atlas, atlas.core_tile_ids, args.samples, rng)
    residual = float(np.abs(psi.evaluate_on_tiles(x, t) - field.evaluate_on_tiles(x, t)).max())
    print(f"field: {name} (subtract_net={subtract})", file=out)
    print(f"stored grid deviation: {grid_gap!r}", file=out)
    print(f"stored net deviation: {net_gap!r}", file=out)
    print(f"round-trip residual at {args.samples} points: {residual!r}", file=out)
    ok = residual <= args.tolerance and grid_gap <= args.tolerance and net_gap <= args.tolerance
    print("PASS" if ok else "FAIL", file=out)
    return EXIT_OK if ok else EXIT_CHECKS


def cmd_verify(args, out) -> int:
    atlas = io.load_atlas(args.atlas)
    report = run_verification(atlas, args.suite, args.tolerance, args.samples, args.seed)
    out.write(report.to_text())
    if args.json:
        io.write_atomic(args.json, report.to_json())
    return EXIT_OK if report.passed else EXIT_CHECKS


COMMANDS = {
    "tile": cmd_tile,
    "render": cmd_render,
    "decompose": cmd_decompose,
    "reconstruct": cmd_reconstruct,
    "verify": cmd_verify,
}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return COMMANDS[args.command](args, out)
    except ResourceLimitError as exc:
        print(f"hyptile: resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (InvalidArgument, FileNotFoundError) as exc:
        print(f"hyptile: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except HypTileError as exc:
        print(f"hyptile: {exc}", file=sys.stderr)
        return EXIT_CHECKS


if __name__ == "__main__":
    sys.exit(main())
