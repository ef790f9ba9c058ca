"""Invariant checks over an atlas, grouped into suites, with text and JSON reports."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import hyperbolic as hb
from . import tiling as tl
from .ops.chi import chi, chi_norm_estimate
from .ops import decomposition as dec
from .ops.builtins import builtin_field
from .ops.estimate import TileRegion, estimate_lipschitz, estimate_partition_lipschitz, sample_in_tiles
from .ops.partition import NetFunction, PartitionOfUnity, extend_from_net
from .parallel import map_chunks

SUITES = ("core", "tiling", "operators")
DECOMPOSITION_FIELDS = ("dist-origin", "bump:1", "netinterp:7")


@dataclass
class Check:
    name: str
    value: float
    threshold: float
    relation: str = "<="
    status: str = ""
    note: str = ""

    def __post_init__(self):
        if not self.status:
            ok = {
                "<=": self.value <= self.threshold,
                ">=": self.value >= self.threshold,
                "==": self.value == self.threshold,
            }[self.relation]
            self.status = "pass" if ok and math.isfinite(self.value) else "fail"


@dataclass
class Report:
    checks: list[Check] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.status != "fail" for c in self.checks)

    def add(self, *args, **kwargs) -> Check:
        c = Check(*args, **kwargs)
        self.checks.append(c)
        return c

    def skip(self, name: str, note: str) -> None:
        self.checks.append(Check(name, float("nan"), float("nan"), status="skipped", note=note))

    def to_json(self) -> str:
        doc = {
            "meta": self.meta,
            "passed": self.passed,
            "checks": [
                {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in asdict(c).items()}
                for c in self.checks
            ],
        }
        return json.dumps(doc, indent=1, sort_keys=True) + "\n"

    def to_text(self) -> str:
        width = max((len(c.name) for c in self.checks), default=10)
        lines = [f"verification report ({', '.join(f'{k}={v}' for k, v in self.meta.items())})"]
        for c in self.checks:
            if c.status == "skipped":
                lines.append(f"  SKIP  {c.name:<{width}}  {c.note}")
            else:
                mark = "PASS" if c.status == "pass" else "FAIL"
                extra = f"  ({c.note})" if c.note else ""
                lines.append(f"  {mark}  {c.name:<{width}}  {c.value:.6g} {c.relation} {c.threshold:.6g}{extra}")
        n_fail = sum(c.status == "fail" for c in self.checks)
        lines.append(f"{len(self.checks)} checks, {n_fail} failed")
        return "\n".join(lines) + "\n"


def _random_points(rng, n, max_dist):
    u = rng.normal(size=(n, 2))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    r = max_dist * np.sqrt(rng.uniform(size=n))
    return hb.lift(np.sinh(r)[:, None] * u)


# ------------------------------------------------------------------ suites
def check_core(report: Report, atlas, rng, samples: int, tolerance: float) -> None:
    m = atlas.tile_matrix
    j = hb.signature(3)
    defect = np.abs(np.einsum("tji,j,tjk->tik", m, j, m) - np.diag(j)).max(axis=(1, 2))
    report.add("core.lorentz_defect_relative", float((defect / np.abs(m).max(axis=(1, 2)) ** 2).max()), 1e-10)

    x = _random_points(rng, samples, 4.0)
    v = atlas.hyper_normals[: atlas.p]
    k = rng.integers(0, len(v), samples)
    twice = hb.reflect_points(hb.reflect_points(x, v[k]), v[k])
    report.add("core.reflection_involution", float(np.abs(twice - x).max()), 1e-12)

    a, b = _random_points(rng, samples, 6.0), _random_points(rng, samples, 6.0)
    gap = np.abs(hb.bk_distance(hb.to_beltrami_klein(a), hb.to_beltrami_klein(b)) - hb.distance(a, b))
    report.add("core.klein_vs_hyperboloid_distance", float(gap.max()), tolerance)

    t = rng.uniform(size=samples)
    mid = np.array([hb.geodesic_point(p, q, s) for p, q, s in zip(a[:200], b[:200], t[:200])])
    add = hb.distance(a[:200], mid) + hb.distance(mid, b[:200]) - hb.distance(a[:200], b[:200])
    report.add("core.geodesic_additivity", float(np.abs(add).max()), 1e-10)

    poly = atlas.template.polytope
    pa, pb = poly.project(a), poly.project(b)
    excess = hb.distance(pa, pb) - hb.distance(a, b)
    report.add("core.projection_1_lipschitz_excess", float(excess.max()), 1e-9)


def check_tiling(report: Report, atlas, rng, samples: int, tolerance: float) -> None:
    tpl = atlas.template
    p = tpl.p
    report.add(
        "template.inradius_vs_closed_form",
        abs(tpl.inradius - math.acosh(math.cos(math.pi / 4) / math.sin(math.pi / p))),
        1e-10,
    )
    report.add(
        "template.circumradius_vs_closed_form",
        abs(tpl.circumradius - math.acosh(1.0 / math.tan(math.pi / p))),
        1e-10,
    )
    n = tpl.face_normals
    adj = np.abs(hb.minkowski_form(n, np.roll(n, -1, axis=0))).max()
    report.add("template.right_angles", float(adj), 1e-10)

    if atlas.generations >= 2 and len(atlas) > 1:
        report.add("tiling.seed_star_size", float(len(tl.closed_star(atlas, 1))), float(2 * p + 1), "==")
    else:
        report.skip("tiling.seed_star_size", "needs two generations")
    if atlas.core_tile_ids:
        inc = tl.vertex_incidences(atlas)
        report.add("tiling.vertices_without_4_tiles", float(sum(v != 4 for v in inc.values())), 0.0, "==")
        counts = [tl.neighbor_count(atlas, t) for t in atlas.core_tile_ids]
        report.add("tiling.max_core_neighbor_count", float(max(counts)), float(tpl.neighbor_bound))
    else:
        report.skip("tiling.vertices_without_4_tiles", "no core tiles")
        report.skip("tiling.max_core_neighbor_count", "no core tiles")

    census = tl.orthogonality_census(atlas)
    report.add("tiling.orthogonality_violations", float(len(census["violations"])), 0.0, "==",
               note=f"{census['pairs']} intersecting pairs")
    if atlas.generations >= 3:
        misses = sum(len(tl.hyperplane_closure_check(atlas, f)["misses"]) for f in range(p))
        report.add("tiling.hyperplane_closure_misses", float(misses), 0.0, "==")
    else:
        report.skip("tiling.hyperplane_closure_misses", "needs three generations")

    c = atlas.net
    d = hb.pairwise_distance(c, c)
    np.fill_diagonal(d, np.inf)
    report.add("tiling.net_separation_margin", float(d.min() - 2 * atlas.delta) if len(c) > 1 else 0.0,
               -1e-9, ">=")

    worst = 0.0
    for t in atlas.tiles:
        mm = tl.word_matrix(tpl, t.word)
        worst = max(worst, float(np.abs(mm - t.isometry.matrix).max() / np.abs(mm).max()))
    report.add("tiling.word_consistency_relative", worst, 1e-10)

    radius = atlas.coverage_radius - atlas.diameter
    if radius > 0:
        x = _random_points(rng, samples, radius)
        idx, _ = atlas.locate(x, strict=False)
        miss = np.sum(idx != atlas.locate_nearest(x))
        report.add("tiling.locate_vs_nearest_incentre", float(miss), 0.0, "==", note=f"{samples} points")
    else:
        report.skip("tiling.locate_vs_nearest_incentre", "coverage radius below one diameter")


def check_operators(report: Report, atlas, rng, samples: int, tolerance: float, seed: int) -> None:
    if not atlas.core_tile_ids:
        report.skip("operators", "atlas has no core tiles")
        return
    core = atlas.core_tile_ids
    pou = PartitionOfUnity(atlas)
    x, tx = sample_in_tiles(atlas, core, samples, rng)

    cand, phi = pou.weights(x, tx, strict=True)
    report.add("pou.sum_minus_one", float(np.abs(phi.sum(axis=1) - 1.0).max()), 1e-12)
    ids = np.asarray(core) - 1
    cand, phi = pou.weights(atlas.net[ids], ids, strict=True)
    kron = np.where(cand == ids[:, None], 1.0, 0.0) * (cand >= 0)
    report.add("pou.kronecker_at_net", float(np.abs(phi - kron).max()), 1e-12)
    report.add("pou.max_nonzero_terms", float((phi > 0).sum(axis=1).max()),
               float(max(len(s) for s in atlas.touching)))

    net = NetFunction(atlas, np.where(np.arange(len(atlas)) == 0, 0.0, rng.normal(size=len(atlas))))
    ext = extend_from_net(atlas, net, pou)
    report.add("net_extension.reproduces_values",
               float(np.abs(ext.evaluate_on_tiles(atlas.net[ids], ids) - net.values[ids]).max()), 1e-12)

    region = TileRegion.core(atlas)
    witness = estimate_partition_lipschitz(pou, samples, seed).value
    constant = pou.bound_constant(witness)
    worst = 0.0
    for s in range(5):
        vals = np.random.default_rng([seed, 100 + s]).normal(size=len(atlas))
        vals[0] = 0.0
        f = NetFunction(atlas, vals)
        lip_ext = estimate_lipschitz(extend_from_net(atlas, f, pou), region, samples, seed + s).value
        worst = max(worst, lip_ext / (constant * f.lipschitz()))
    report.add("net_extension.lipschitz_ratio_to_bound", worst, 1.0,
               note=f"L_N {witness:.4g}, C {constant:.4g}, 5 net functions")

    field = builtin_field("dist-origin", atlas)
    k = atlas.tile_faces[tx, rng.integers(0, atlas.p, len(tx))]
    back = np.array([
        chi(atlas, int(kk), chi(atlas, int(kk), field), inverse=True).evaluate(xx[None])[0]
        for kk, xx in zip(k[:200], x[:200])
    ])
    report.add("chi.inverse_round_trip", float(np.abs(back - field.evaluate(x[:200])).max()), 1e-12)

    hidden_mismatch = 0
    for m in core:
        s_rule = sorted(j for _, j in dec.compute_S(atlas, m))
        if s_rule != dec.invisible_faces(atlas, m):
            hidden_mismatch += 1
    report.add("S.matches_visibility", float(hidden_mismatch), 0.0, "==")
    report.add("S.seed_is_full_boundary", float(len(dec.compute_S(atlas, 1))), float(atlas.p), "==")

    face_pts, face_tiles = _s_face_samples(atlas, core, 16)
    bound = chi_norm_estimate(atlas) ** atlas.template.face_count
    for name in DECOMPOSITION_FIELDS:
        g = builtin_field(name, atlas)
        net_g, seq = dec.decompose(atlas, g, pou=pou)
        psi = dec.reconstruct(atlas, net_g, seq, pou=pou)
        res = map_chunks(lambda a, b: psi.evaluate_on_tiles(a, b) - g.evaluate_on_tiles(a, b), x, tx)
        report.add(f"decompose[{name}].psi_phi_identity", float(np.abs(res).max()), tolerance)
        van = seq.evaluate(face_tiles, face_pts)
        report.add(f"decompose[{name}].vanishes_on_S", float(np.abs(van).max()), tolerance)
        centre = seq.evaluate(ids, atlas.net[ids])
        report.add(f"decompose[{name}].zero_at_net", float(np.abs(centre).max()), 1e-12)
        lip_pieces = estimate_lipschitz(seq, region, samples, seed).value
        lip_g = estimate_lipschitz(seq.base, region, samples, seed).value
        report.add(f"decompose[{name}].uniform_bound", lip_pieces, bound * lip_g,
                   note=f"max Lip(g_m) {lip_pieces:.4g} vs {bound:.4g} * {lip_g:.4g}")

    h = dec.random_admissible_sequence(atlas, seed)
    back = dec.decompose(atlas, dec.reconstruct(atlas, None, h, pou=pou), subtract_net=False)[1]
    res = map_chunks(lambda a, b: back.evaluate(b, a) - h.evaluate(b, a), x, tx)
    report.add("reconstruct.phi_psi_identity", float(np.abs(res).max()), tolerance)

    g = builtin_field("tanh-bk-x", atlas, based=False)
    _, seq = dec.decompose(atlas, g, subtract_net=False)
    psi = dec.reconstruct(atlas, None, seq)
    res = map_chunks(lambda a, b: psi.evaluate_on_tiles(a, b) - g.evaluate_on_tiles(a, b), x, tx)
    report.add("bounded_variant.psi_phi_identity", float(np.abs(res).max()), tolerance)


def _s_face_samples(atlas, tile_ids, per_face: int):
    pts, tiles = [], []
    ts = np.linspace(0.0, 1.0, per_face)
    for m in tile_ids:
        verts = atlas.tile_vertices[m - 1]
        for _, j in dec.compute_S(atlas, m):
            pts.append(hb.geodesic_points(verts[j], verts[(j + 1) % atlas.p], ts))
            tiles.append(np.full(per_face, m - 1))
    return np.concatenate(pts), np.concatenate(tiles)


def run_verification(atlas, suite: str = "all", tolerance: float = 1e-9, samples: int = 1000, seed: int = 0) -> Report:
    chosen = SUITES if suite == "all" else (suite,)
    report = Report(meta={"p": atlas.p, "generations": atlas.generations, "tiles": len(atlas),
                          "suite": suite, "tolerance": tolerance, "samples": samples, "seed": seed})
    for name in chosen:
        rng = np.random.default_rng([seed, SUITES.index(name)])
        if name == "core":
            check_core(report, atlas, rng, samples, tolerance)
        elif name == "tiling":
            check_tiling(report, atlas, rng, samples, tolerance)
        else:
            check_operators(report, atlas, rng, samples, tolerance, seed)
    return report
