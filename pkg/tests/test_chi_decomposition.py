import numpy as np
import pytest

from hyptile import hyperbolic as hb
from hyptile.errors import BoundaryTruncationError, InvalidArgument
from hyptile.ops import decomposition as dec
from hyptile.ops.builtins import builtin_field
from hyptile.ops.chi import (
    ChiSweep,
    chi,
    chi_norm_estimate,
    cutoff_psi,
    cutoff_values,
    leaf_expansion,
)
from hyptile.ops.estimate import sample_in_tiles, sample_template
from hyptile.ops.fields import ConstantField, FunctionField, distance_from_origin, klein_coordinate


def corner_points(atlas, tile_ids, rng, per_tile=20):
    """Points of the given tiles crowded near vertices, where two cutoffs overlap."""
    tpl = atlas.template
    out, tiles = [], []
    for m in tile_ids:
        k = rng.integers(0, atlas.p, per_tile)
        s = rng.uniform(0.9, 0.999, per_tile)
        y = hb.normalize(s[:, None] * tpl.vertices[k] + (1 - s)[:, None] * tpl.incentre)
        out.append(y @ atlas.tile_matrix[m - 1].T)
        tiles.append(np.full(per_tile, m - 1))
    return np.concatenate(out), np.concatenate(tiles)


def face_points(atlas, tile_id, positions, per_face=12):
    verts = atlas.tile_vertices[tile_id - 1]
    ts = np.linspace(0.02, 0.98, per_face)
    pts = [hb.geodesic_points(verts[j], verts[(j + 1) % atlas.p], ts) for j in positions]
    return np.concatenate(pts) if pts else np.zeros((0, 3))


@pytest.fixture(scope="module")
def inner_ids(atlas3):
    return [t.id for t in atlas3.tiles if t.generation <= 1]


@pytest.fixture(scope="module")
def admissible(atlas4):
    return dec.random_admissible_sequence(atlas4, seed=5)


class TestCutoff:
    def test_profile(self):
        eps = 0.5
        ip = np.sinh(np.array([0.0, 0.25, 0.5, 0.75]))
        assert np.allclose(cutoff_values(ip, eps), [1.0, 0.5, 0.0, 0.0], atol=1e-15)
        assert np.allclose(cutoff_values(-ip, eps), [1.0, 0.5, 0.0, 0.0], atol=1e-15)

    def test_one_exactly_on_hyperplane(self, atlas3):
        psi = cutoff_psi(atlas3, 0)
        on = face_points(atlas3, 1, [int(np.flatnonzero(atlas3.tile_faces[0] == 0)[0])])
        assert np.abs(psi(on) - 1.0).max() <= 1e-12

    def test_bad_index(self, atlas3):
        with pytest.raises(InvalidArgument):
            cutoff_psi(atlas3, len(atlas3.hyperplanes))

    def test_norm_estimate(self, atlas3):
        assert chi_norm_estimate(atlas3) == pytest.approx(2.0 + atlas3.diameter / atlas3.epsilon)


class TestChi:
    def test_inverse_round_trip(self, atlas3, inner_ids, rng):
        g = distance_from_origin()
        x, t = sample_in_tiles(atlas3, inner_ids, 400, rng)
        for k in np.unique(atlas3.tile_faces[t]):
            rows = np.flatnonzero((atlas3.tile_faces[t] == k).any(axis=1))
            once = chi(atlas3, int(k), chi(atlas3, int(k), g), inverse=True)
            assert np.abs(once.evaluate(x[rows]) - g.evaluate(x[rows])).max() <= 1e-12
            back = chi(atlas3, int(k), chi(atlas3, int(k), g, inverse=True))
            assert np.abs(back.evaluate(x[rows]) - g.evaluate(x[rows])).max() <= 1e-12

    def test_identity_on_far_side(self, atlas3, rng):
        g = klein_coordinate(0)
        x = hb.lift(rng.normal(scale=2.0, size=(500, 2)))
        for k in range(8):
            v = atlas3.hyper_normals[k]
            far = hb.minkowski_form(x, v) > 0
            assert np.any(far)
            assert np.array_equal(chi(atlas3, k, g).evaluate(x[far]), g.evaluate(x[far]))

    def test_single_operator_formula(self, atlas3, rng):
        g = distance_from_origin()
        k = 3
        v = atlas3.hyper_normals[k]
        x = hb.lift(rng.normal(scale=0.8, size=(500, 2)))
        near = hb.minkowski_form(x, v) <= 0
        psi = cutoff_values(hb.minkowski_form(x, v), atlas3.epsilon)
        expect = g.evaluate(x) - np.where(near, psi, 0.0) * g.evaluate(hb.reflect_points(x, v))
        assert np.abs(chi(atlas3, k, g).evaluate(x) - expect).max() <= 1e-13

    def test_sweep_of_one_matches_operator(self, atlas3, rng):
        g = distance_from_origin()
        x = hb.lift(rng.normal(scale=1.5, size=(300, 2)))
        for k in (0, 5, 17):
            a = ChiSweep(atlas3, [k], g).evaluate(x)
            b = chi(atlas3, k, g).evaluate(x)
            assert np.abs(a - b).max() <= 1e-14


class TestLeafExpansion:
    @pytest.mark.parametrize("ascending", [True, False])
    def test_matches_literal_sweep(self, atlas3, inner_ids, rng, ascending):
        g = builtin_field("dist-origin", atlas3)
        x1, t1 = sample_in_tiles(atlas3, inner_ids, 300, rng)
        x2, t2 = corner_points(atlas3, inner_ids, rng)
        x, t = np.concatenate([x1, x2]), np.concatenate([t1, t2])
        order = list(range(len(atlas3.hyperplanes)))
        sweep = ChiSweep(atlas3, order if ascending else order[::-1], g)
        phi = dec.PhiSequence(atlas3, g)
        assert np.abs(sweep.evaluate(x) - phi.evaluate(t, x)).max() <= 1e-10

    def test_at_most_two_faces(self, atlas3, inner_ids, rng):
        x, t = corner_points(atlas3, inner_ids, rng)
        leaves = leaf_expansion(atlas3, x, t)
        assert leaves.positions.shape == (len(x), 2)
        both = np.all(leaves.positions >= 0, axis=1)
        assert np.any(both)
        p0, p1 = leaves.positions[both].T
        # the two near faces are adjacent, hence orthogonal
        assert np.all(((p1 - p0) % atlas3.p == 1) | ((p0 - p1) % atlas3.p == 1))

    def test_leaf_points_are_reflections(self, atlas3, inner_ids, rng):
        x, t = corner_points(atlas3, inner_ids, rng)
        leaves = leaf_expansion(atlas3, x, t)
        for i in np.flatnonzero(leaves.positions[:, 0] >= 0)[:40]:
            h = atlas3.tile_faces[t[i], leaves.positions[i, 0]]
            r = hb.reflect_points(x[i][None], atlas3.hyper_normals[h])[0]
            assert np.abs(leaves.points[i, 1] - r).max() <= 1e-12 * np.abs(r).max()
            assert atlas3.inside_tiles(r[None], np.array([leaves.tiles[i, 1]]), strict=False)[0]

    def test_weights_follow_tile_side(self, atlas4, rng):
        x, t = corner_points(atlas4, atlas4.core_tile_ids, rng)
        leaves = leaf_expansion(atlas4, x, t)
        pos = leaves.positions
        plus = atlas4.tile_face_plus[t[:, None], np.maximum(pos, 0)] & (pos >= 0)
        assert np.all(leaves.weights[~plus] == 0.0)
        assert np.all(leaves.weights[plus] > 0.0)
        seed = t == 0
        assert np.all(leaves.weights[seed][pos[seed] >= 0] > 0.0)


class TestVanishingSets:
    def test_seed_is_full_boundary(self, atlas4):
        assert sorted(j for _, j in dec.compute_S(atlas4, 1)) == list(range(atlas4.p))

    def test_matches_visibility(self, atlas4):
        for m in atlas4.core_tile_ids:
            assert sorted(j for _, j in dec.compute_S(atlas4, m)) == dec.invisible_faces(atlas4, m)

    def test_other_tiles_see_some_face(self, atlas4):
        for m in atlas4.core_tile_ids[1:]:
            assert 0 < len(dec.compute_S(atlas4, m)) < atlas4.p

    def test_non_core_rejected(self, atlas4):
        outer = int(np.flatnonzero(~atlas4.is_core)[0]) + 1
        with pytest.raises(BoundaryTruncationError):
            dec.compute_S(atlas4, outer)

    def test_allowed_face_modes(self, atlas4):
        faces = dec.allowed_faces(atlas4, "faces")
        full = dec.allowed_faces(atlas4, "full")
        assert np.array_equal(faces, ~atlas4.tile_face_plus)
        assert np.all(full >= faces)
        assert np.all(dec.allowed_faces(atlas4, "all"))
        with pytest.raises(InvalidArgument):
            dec.allowed_faces(atlas4, "some")


class TestPhi:
    @pytest.mark.parametrize("name", ["dist-origin", "bump:1", "netinterp:7", "bk-y"])
    def test_vanishes_on_S_and_at_net(self, atlas4, pou4, name):
        g = builtin_field(name, atlas4)
        _, seq = dec.decompose(atlas4, g, pou=pou4)
        worst = 0.0
        for m in atlas4.core_tile_ids:
            pts = face_points(atlas4, m, [j for _, j in dec.compute_S(atlas4, m)])
            worst = max(worst, float(np.abs(seq.evaluate(np.full(len(pts), m - 1), pts)).max()))
        assert worst <= 1e-9
        ids = np.asarray(atlas4.core_tile_ids) - 1
        assert np.abs(seq.evaluate(ids, atlas4.net[ids])).max() <= 1e-12

    def test_requires_basepoint_zero(self, atlas4):
        with pytest.raises(InvalidArgument):
            dec.decompose(atlas4, builtin_field("bump:1", atlas4, based=False))

    def test_zero_field(self, atlas4, rng):
        x, t = sample_in_tiles(atlas4, atlas4.core_tile_ids, 500, rng)
        net, seq = dec.decompose(atlas4, ConstantField(0.0))
        assert np.all(net.values == 0.0)
        assert np.all(seq.evaluate(t, x) == 0.0)

    def test_linear(self, atlas4, pou4, rng):
        x, t = sample_in_tiles(atlas4, atlas4.core_tile_ids, 1000, rng)
        f = builtin_field("dist-origin", atlas4)
        g = builtin_field("bk-x", atlas4)
        nf, sf = dec.decompose(atlas4, f, pou=pou4)
        ng, sg = dec.decompose(atlas4, g, pou=pou4)
        nh, sh = dec.decompose(atlas4, 2.0 * f - 3.0 * g, pou=pou4)
        assert np.abs(nh.values - (2.0 * nf.values - 3.0 * ng.values)).max() <= 1e-12
        combo = (2.0 * sf + (-3.0) * sg).evaluate(t, x)
        assert np.abs(sh.evaluate(t, x) - combo).max() <= 1e-10

    def test_local_and_world_evaluation_agree(self, atlas4, pou4, rng):
        x, t = sample_in_tiles(atlas4, atlas4.core_tile_ids, 500, rng)
        _, seq = dec.decompose(atlas4, builtin_field("netinterp:7", atlas4), pou=pou4)
        assert np.abs(seq.evaluate(t, x) - seq.evaluate_local(t, atlas4.to_local(x, t))).max() <= 1e-12


class TestTileExtension:
    def test_restriction_is_h(self, atlas4, admissible, rng):
        for m in atlas4.core_tile_ids[:10]:
            h = admissible.component(m)
            ext = dec.extend_from_tile(atlas4, m, h)
            x, t = sample_in_tiles(atlas4, [m], 200, rng)
            assert np.abs(ext.evaluate_on_tiles(x, t) - h.evaluate_on_tiles(x, t)).max() <= 1e-12

    def test_support_in_star(self, atlas4, admissible, rng):
        m = atlas4.core_tile_ids[7]
        ext = dec.TileExtension(atlas4, m, admissible.component(m))
        star = set(atlas4.touching[m - 1])
        far = [t.id for t in atlas4.tiles[:400] if t.id - 1 not in star]
        x, t = sample_in_tiles(atlas4, far, 2000, rng)
        assert np.all(ext.evaluate_on_tiles(x, t) == 0.0)

    def test_continuous_across_faces(self, atlas4, admissible):
        worst = 0.0
        for m in atlas4.core_tile_ids:
            ext = dec.TileExtension(atlas4, m, admissible.component(m))
            for j in range(atlas4.p):
                other = atlas4.face_neighbor[m - 1, j]
                pts = face_points(atlas4, m, [j])
                inner = ext.evaluate_on_tiles(pts, np.full(len(pts), m - 1))
                outer = ext.evaluate_on_tiles(pts, np.full(len(pts), other))
                worst = max(worst, float(np.abs(inner - outer).max()))
        assert worst <= 1e-8

    def test_modes_agree(self, atlas4, admissible, rng):
        x, t = sample_in_tiles(atlas4, atlas4.core_tile_ids, 1000, rng)
        values = [
            dec.reconstruct(atlas4, None, admissible, mode=mode).evaluate_on_tiles(x, t)
            for mode in dec.EXTENSION_MODES
        ]
        assert np.abs(values[0] - values[1]).max() <= 1e-10
        assert np.abs(values[0] - values[2]).max() <= 1e-10

    def test_batched_matches_literal_sum(self, atlas4, admissible, rng):
        x, t = sample_in_tiles(atlas4, atlas4.core_tile_ids[:9], 600, rng)
        ids = sorted({m + 1 for s in t for m in atlas4.touching[s]})
        literal = dec.literal_reconstruction(atlas4, None, admissible, ids)
        batched = dec.reconstruct(atlas4, None, admissible)
        assert np.abs(literal.evaluate_on_tiles(x, t) - batched.evaluate_on_tiles(x, t)).max() <= 1e-12

    def test_precondition(self, atlas4):
        with pytest.raises(InvalidArgument):
            dec.extend_from_tile(atlas4, 2, ConstantField(1.0))
        field = FunctionField(lambda x: np.zeros(len(x)), "zero")
        dec.extend_from_tile(atlas4, 2, field)


class TestRoundTrips:
    @pytest.mark.parametrize("name", ["dist-origin", "bump:1", "netinterp:7"])
    def test_psi_after_phi(self, atlas4, pou4, rng, name):
        g = builtin_field(name, atlas4)
        net, seq = dec.decompose(atlas4, g, pou=pou4)
        psi = dec.reconstruct(atlas4, net, seq, pou=pou4)
        x1, t1 = sample_in_tiles(atlas4, atlas4.core_tile_ids, 2000, rng)
        x2, t2 = corner_points(atlas4, atlas4.core_tile_ids, rng, 10)
        x, t = np.concatenate([x1, x2]), np.concatenate([t1, t2])
        assert np.abs(psi.evaluate_on_tiles(x, t) - g.evaluate_on_tiles(x, t)).max() <= 1e-9

    def test_phi_after_psi(self, atlas4, pou4, rng):
        h = dec.random_admissible_sequence(atlas4, seed=11)
        back = dec.decompose(atlas4, dec.reconstruct(atlas4, None, h, pou=pou4), subtract_net=False)[1]
        x, t = sample_in_tiles(atlas4, atlas4.core_tile_ids, 3000, rng)
        assert np.abs(back.evaluate(t, x) - h.evaluate(t, x)).max() <= 1e-9

    def test_bounded_variant(self, atlas4, rng):
        g = builtin_field("tanh-bk-x", atlas4, based=False)
        net, seq = dec.decompose(atlas4, g, subtract_net=False)
        assert net is None
        psi = dec.reconstruct(atlas4, None, seq)
        x, t = sample_in_tiles(atlas4, atlas4.core_tile_ids, 2000, rng)
        assert np.abs(psi.evaluate_on_tiles(x, t) - g.evaluate_on_tiles(x, t)).max() <= 1e-9

    def test_reconstruct_locates_points(self, atlas4, pou4, rng):
        g = builtin_field("bk-x", atlas4)
        net, seq = dec.decompose(atlas4, g, pou=pou4)
        psi = dec.reconstruct(atlas4, net, seq, pou=pou4)
        x, _ = sample_in_tiles(atlas4, atlas4.core_tile_ids, 300, rng)
        assert np.abs(psi.evaluate(x) - g.evaluate(x)).max() <= 1e-9

    def test_atlas_mismatch(self, atlas3, atlas4):
        h = dec.random_admissible_sequence(atlas3)
        with pytest.raises(InvalidArgument):
            dec.reconstruct(atlas4, None, h)
