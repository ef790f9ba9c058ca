import math

import numpy as np
import pytest

from hyptile import hyperbolic as hb
from hyptile.errors import InvalidArgument, NumericalDomainError

from conftest import random_points

O = hb.origin(2)
P1 = np.array([math.sinh(1.0), 0.0, math.cosh(1.0)])


class TestMinkowskiForm:
    def test_basepoint_is_timelike_unit(self):
        assert hb.minkowski_form(O, O) == -1.0

    def test_spacelike_unit(self):
        assert hb.minkowski_form([1.0, 0, 0], [1.0, 0, 0]) == 1.0

    def test_geodesic_point(self):
        assert hb.minkowski_form(O, P1) == pytest.approx(-1.5430806348152437, abs=1e-15)

    def test_bilinear_and_symmetric(self, rng):
        x, y, z = rng.normal(size=(3, 4))
        a, b = rng.normal(size=2)
        assert hb.minkowski_form(x, y) == pytest.approx(hb.minkowski_form(y, x))
        lhs = hb.minkowski_form(a * x + b * y, z)
        assert lhs == pytest.approx(a * hb.minkowski_form(x, z) + b * hb.minkowski_form(y, z))

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidArgument):
            hb.minkowski_form([0, 0, 1.0], [0, 0, 0, 1.0])


class TestDistance:
    def test_zero_at_same_point(self):
        assert hb.distance(O, O) == 0.0

    def test_unit_geodesic(self):
        assert hb.distance(O, P1) == pytest.approx(1.0, abs=1e-14)

    def test_symmetry_and_triangle(self, rng):
        x, y, z = (random_points(rng, 100) for _ in range(3))
        assert np.array_equal(hb.distance(x, y), hb.distance(y, x))
        assert np.all(hb.distance(x, z) <= hb.distance(x, y) + hb.distance(y, z) + 1e-12)

    def test_matches_arcosh_formula(self, rng):
        x, y = random_points(rng, 200), random_points(rng, 200)
        ref = np.arccosh(-hb.minkowski_form(x, y))
        assert np.allclose(hb.distance(x, y), ref, atol=1e-9)

    def test_domain_error_for_bad_input(self):
        # two distinct vectors with -<x, y> well below 1 are not points of H^2
        with pytest.raises(NumericalDomainError):
            hb.distance([0.0, 0.0, 1.0], [0.0, 0.0, 0.5])

    def test_near_coincident_points_clamp(self):
        y = O + np.array([1e-13, 0.0, 0.0])
        assert hb.distance(O, y) < 1e-12

    def test_nearby_points_keep_precision(self):
        y = np.array([math.sinh(1e-9), 0.0, math.cosh(1e-9)])
        assert hb.distance(O, y) == pytest.approx(1e-9, rel=1e-6)

    def test_higher_dimension(self):
        x = np.array([0.0, 0.0, math.sinh(2.0), math.cosh(2.0)])
        assert hb.distance(hb.origin(3), x) == pytest.approx(2.0, abs=1e-14)


class TestReflection:
    def test_coordinate_reflection(self):
        r = hb.reflect(hb.Hyperplane([1.0, 0.0, 0.0]))
        assert np.allclose(r.matrix, np.diag([-1.0, 1.0, 1.0]))

    def test_involution(self, rng):
        v = hb.Hyperplane.from_vector([0.3, -0.8, 0.4])
        x = random_points(rng, 100)
        back = hb.reflect_points(hb.reflect_points(x, v.normal), v.normal)
        assert np.abs(back - x).max() <= 1e-12

    def test_fixes_hyperplane_and_swaps_sides(self, rng):
        v = hb.Hyperplane.from_vector([1.0, 0.5, 0.6]).normal
        x = random_points(rng, 50)
        on = hb.normalize(x - hb.minkowski_form(x, v)[:, None] * v)
        assert np.abs(hb.reflect_points(on, v) - on).max() < 1e-12
        assert np.all(hb.minkowski_form(x, v) * hb.minkowski_form(hb.reflect_points(x, v), v) <= 1e-12)

    def test_orthogonal_reflections_commute(self):
        v1 = np.array([1.0, 0.0, 0.0])
        v2 = np.array([0.0, 1.0, 0.0])
        r1, r2 = hb.reflection_matrix(v1), hb.reflection_matrix(v2)
        assert np.array_equal(r1 @ r2, r2 @ r1)
        assert np.allclose(r1 @ r2, np.diag([-1.0, -1.0, 1.0]))

    def test_rejects_non_unit_normal(self):
        with pytest.raises(InvalidArgument):
            hb.reflect(np.array([2.0, 0.0, 0.0]))

    def test_preserves_form(self):
        m = hb.reflection_matrix(hb.Hyperplane.from_vector([2.0, 1.0, 1.5]).normal)
        assert hb.lorentz_defect(m) < 1e-12


class TestHyperplane:
    def test_canonical_orientation(self):
        h = hb.Hyperplane.from_vector([-1.0, 0.0, -0.5])
        assert h.normal[-1] > 0
        assert h.side(O) < 0

    def test_through_origin_uses_lexicographic_sign(self):
        assert hb.Hyperplane([-1.0, 0.0, 0.0]).normal[0] == 1.0

    def test_rejects_timelike(self):
        with pytest.raises(InvalidArgument):
            hb.Hyperplane.from_vector([0.0, 0.0, 1.0])

    def test_distance_closed_form(self):
        for t in (0.0, 0.3, 2.5):
            x = np.array([math.sinh(t), 0.0, math.cosh(t)])
            assert hb.dist_to_hyperplane(x, [1.0, 0.0, 0.0]) == pytest.approx(t, abs=1e-14)

    def test_distance_against_sampled_hyperplane(self, rng):
        h = hb.Hyperplane.from_vector([1.0, 0.4, 0.7])
        foot = h.closest_point_to_origin()
        u = np.cross(hb.signature(3) * h.normal, hb.signature(3) * foot)
        u = u / math.sqrt(hb.minkowski_form(u, u))
        s = np.linspace(-8.0, 8.0, 10_000)
        line = np.cosh(s)[:, None] * foot + np.sinh(s)[:, None] * u
        assert np.abs(hb.minkowski_form(line, h.normal)).max() < 1e-9
        x = random_points(rng, 5, 2.0)
        brute = hb.pairwise_distance(x, line).min(axis=1)
        assert np.abs(brute - h.distance(x)).max() <= 1e-3


class TestModels:
    def test_klein_examples(self):
        assert np.array_equal(hb.to_beltrami_klein(O), [0.0, 0.0])
        assert hb.to_beltrami_klein(P1) == pytest.approx([math.tanh(1.0), 0.0])

    def test_poincare_examples(self):
        assert np.array_equal(hb.to_poincare(O), [0.0, 0.0])
        assert hb.to_poincare(P1) == pytest.approx([0.46211715726000974, 0.0])

    def test_round_trips(self, rng):
        x = random_points(rng, 100)
        assert np.abs(hb.from_beltrami_klein(hb.to_beltrami_klein(x)) - x).max() <= 1e-12 * 20
        assert np.abs(hb.from_poincare(hb.to_poincare(x)) - x).max() <= 1e-12 * 20

    def test_klein_round_trip_near_origin(self, rng):
        x = random_points(rng, 100, 1.0)
        assert np.abs(hb.from_beltrami_klein(hb.to_beltrami_klein(x)) - x).max() <= 1e-12

    def test_inside_unit_ball(self, rng):
        x = random_points(rng, 1000, 6.0)
        assert np.all(np.linalg.norm(hb.to_poincare(x), axis=1) < 1)
        assert np.all(np.linalg.norm(hb.to_beltrami_klein(x), axis=1) < 1)

    def test_outside_ball_rejected(self):
        with pytest.raises(InvalidArgument):
            hb.from_beltrami_klein([1.0, 0.0])
        with pytest.raises(InvalidArgument):
            hb.bk_distance([0.0, 0.0], [0.6, 0.9])


class TestKleinDistance:
    def test_radial(self):
        assert hb.bk_distance([0.0, 0.0], [math.tanh(1.0), 0.0]) == pytest.approx(1.0, abs=1e-14)

    def test_same_point(self):
        assert hb.bk_distance([0.2, 0.1], [0.2, 0.1]) == 0.0

    def test_agrees_with_hyperboloid(self, rng):
        x, y = random_points(rng, 1000, 6.0), random_points(rng, 1000, 6.0)
        kx, ky = hb.to_beltrami_klein(x), hb.to_beltrami_klein(y)
        assert np.abs(hb.bk_distance(kx, ky) - hb.distance(x, y)).max() <= 1e-9

    def test_local_bi_lipschitz_near_origin(self, rng):
        k = hb.to_beltrami_klein(random_points(rng, 500, 2.0))
        step = rng.normal(size=k.shape)
        step *= rng.uniform(1e-5, 1e-3, (len(k), 1)) / np.linalg.norm(step, axis=1, keepdims=True)
        ratio = hb.bk_distance(k, k + step) / np.linalg.norm(step, axis=1)
        # at Klein radius tanh 2 the metric distortion stays within these bounds
        assert ratio.min() > 0.9 and ratio.max() < 1.0 / (1.0 - math.tanh(2.0) ** 2) + 0.1


class TestGeodesics:
    def test_endpoints(self, rng):
        x, y = random_points(rng, 2)
        assert np.array_equal(hb.geodesic_point(x, y, 0.0), x)
        assert np.array_equal(hb.geodesic_point(x, y, 1.0), y)

    def test_midpoint_and_additivity(self, rng):
        x, y = random_points(rng, 2)
        m = hb.geodesic_point(x, y, 0.5)
        assert abs(hb.distance(x, m) - hb.distance(y, m)) <= 1e-10
        for t in rng.uniform(size=10):
            g = hb.geodesic_point(x, y, t)
            assert hb.distance(x, g) == pytest.approx(t * hb.distance(x, y), abs=1e-10)
            assert hb.distance(x, g) + hb.distance(g, y) == pytest.approx(hb.distance(x, y), abs=1e-10)

    def test_parameter_range(self):
        with pytest.raises(InvalidArgument):
            hb.geodesic_point(O, P1, 1.5)

    def test_right_angle(self):
        a = hb.angle_at(O, P1, np.array([0.0, math.sinh(1.0), math.cosh(1.0)]))
        assert a == pytest.approx(math.pi / 2, abs=1e-14)


class TestIsometry:
    def test_rejects_non_lorentz(self):
        with pytest.raises(InvalidArgument):
            hb.LorentzIsometry(np.diag([2.0, 1.0, 1.0]))

    def test_rejects_sheet_swap(self):
        with pytest.raises(InvalidArgument):
            hb.LorentzIsometry(np.diag([1.0, 1.0, -1.0]))

    def test_inverse_and_composition(self):
        r = hb.reflect(hb.Hyperplane.from_vector([1.0, 0.2, 0.5]))
        s = hb.reflect(hb.Hyperplane.from_vector([0.1, 1.0, 0.4]))
        m = r @ s
        assert np.allclose((m @ m.inverse()).matrix, np.eye(3), atol=1e-12)
        assert np.allclose(m(O), r(s(O)), atol=1e-12)

    def test_apply_normal(self):
        r = hb.reflect(hb.Hyperplane.from_vector([1.0, 0.2, 0.5]))
        v = np.array([0.0, 1.0, 0.0])
        w = r.apply_normal(v)
        x = r(np.array([0.0, 0.0, 1.0]))
        assert abs(hb.minkowski_form(x, w)) < 1e-12


class TestProjection:
    @pytest.fixture
    def hexagon(self):
        c = 1.0 / math.sqrt(2.0) / math.sin(math.pi / 6)
        s = math.sqrt(c * c - 1)
        normals = [
            [c * math.cos(a), c * math.sin(a), s] for a in np.arange(6) * math.pi / 3 + math.pi / 6
        ]
        return hb.ConvexPolytope(normals)

    def test_identity_inside(self, hexagon):
        assert np.array_equal(hb.project_to_polytope(O, hexagon), O)

    def test_half_space_foot(self, rng):
        v = hb.Hyperplane.from_vector([1.0, 0.3, 0.5]).normal
        half = hb.ConvexPolytope([v])
        x = random_points(rng, 200)
        out = hb.minkowski_form(x, v) > 0
        proj = half.project(x[out])
        assert np.abs(hb.distance(x[out], proj) - hb.dist_to_hyperplane(x[out], v)).max() <= 1e-9

    def test_result_inside_and_one_lipschitz(self, hexagon, rng):
        x, y = random_points(rng, 1000), random_points(rng, 1000)
        px, py = hexagon.project(x), hexagon.project(y)
        assert np.all(hexagon.contains(px, 1e-9))
        assert np.all(hb.distance(px, py) <= hb.distance(x, y) + 1e-9)

    def test_vertices(self, hexagon):
        assert len(hexagon.vertices()) == 6

    def test_empty_polytope(self):
        # Klein half-planes k_1 <= -1/2 and k_1 >= 1/2
        a = -math.atanh(0.5)
        strip = [[math.cosh(a), 0.0, math.sinh(a)], [-math.cosh(a), 0.0, math.sinh(a)]]
        with pytest.raises(InvalidArgument, match="empty"):
            hb.project_to_polytope(O, hb.ConvexPolytope(strip))

    def test_non_unit_normals_rejected(self):
        with pytest.raises(InvalidArgument, match="unit"):
            hb.ConvexPolytope([[1.0, 0.0, 0.2]])
