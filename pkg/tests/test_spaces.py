"""Geodesic-space oracles, convex sets, projections and probes."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from catfix import minkowski as mk
from catfix import rtree
from catfix import spaces as sp
from catfix.errors import GeometryError

H2 = sp.HyperbolicSpace()
O = H2.base_point()


def axis_point(t, h=0.0):
    """Point at signed perpendicular distance ``h`` from c(t) on the x1-axis ray."""
    return np.array([math.sinh(t) * math.cosh(h), math.sinh(h), math.cosh(t) * math.cosh(h)])


def axis_ray(space=H2):
    return sp.Ray(space, axis_point(0.0), axis_point(1.0))


class CircleMetric(sp.GeodesicSpace):
    """Unit circle with arc-length distance; not uniquely geodesic at antipodes."""

    tag = "circle"

    def dist(self, x, y):
        d = abs(x - y) % (2 * math.pi)
        return min(d, 2 * math.pi - d)

    def geodesic_point(self, x, y, s):
        fwd = (y - x) % (2 * math.pi)
        return x + s if fwd <= math.pi else x - s


@pytest.fixture
def tripod():
    return sp.TreeSpace(rtree.star_tree([2.0, 2.0, 2.0]))


class TestCombine:
    def test_endpoints(self):
        y = axis_point(2.0, 0.5)
        assert sp.combine(H2, O, y, 0.0) is O
        assert sp.combine(H2, O, y, 1.0) is y

    def test_midpoint(self):
        x, y = axis_point(-1.0, 0.3), axis_point(2.0, -0.4)
        m = sp.combine(H2, x, y, 0.5)
        assert H2.dist(x, m) == pytest.approx(H2.dist(m, y), abs=1e-9)

    def test_rejects_weight(self):
        with pytest.raises(GeometryError):
            sp.combine(H2, O, axis_point(1.0), 1.5)

    def test_tree_walks_through_center(self, tripod):
        t = tripod.tree
        a, b = t.point(node="l0"), t.point(node="l1")
        assert sp.combine(tripod, a, b, 0.5) == t.point(node="c")
        assert tripod.dist(sp.combine(tripod, a, b, 0.75), b) == pytest.approx(1.0)

    @given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2), st.floats(0, 1))
    @settings(max_examples=150, deadline=None)
    def test_chord_length_identity(self, a, b, c, d, t):
        x, y = mk.lift([a, b]), mk.lift([c, d])
        z = sp.combine(H2, x, y, t)
        assert H2.dist(x, z) == pytest.approx(t * H2.dist(x, y), abs=1e-9)


class TestOracleConsistency:
    @pytest.mark.parametrize("space", [H2, sp.ScaledHyperbolicSpace(-2.0), sp.EuclideanSpace()])
    def test_geodesic_arcs(self, space):
        rng = np.random.default_rng(0)
        for _ in range(50):
            x, y = space.random_point(rng, radius=3.0), space.random_point(rng, radius=3.0)
            d = space.dist(x, y)
            s1, s2 = sorted(rng.random(2) * d)
            p, q = space.geodesic_point(x, y, s1), space.geodesic_point(x, y, s2)
            assert space.dist(p, q) == pytest.approx(s2 - s1, abs=1e-8)

    def test_model_space_factory(self):
        assert isinstance(sp.model_space(0.0), sp.EuclideanSpace)
        assert sp.model_space(-4.0).dist(mk.base_point(2), axis_point(2.0)) == pytest.approx(1.0)

    def test_klein_chart_roundtrip(self):
        c = axis_point(0.7, 0.2)
        to, back, dim = H2.chart(c)
        p = axis_point(-1.0, 1.5)
        np.testing.assert_allclose(back(to(p)), p, atol=1e-12)
        np.testing.assert_allclose(to(c), 0.0, atol=1e-15)
        with pytest.raises(GeometryError):
            back([1.0, 0.0])

    def test_klein_chords_are_geodesics(self):
        to, back, _ = H2.chart(O)
        x, y = axis_point(1.0, 0.5), axis_point(-0.5, 1.2)
        m = H2.geodesic_point(x, y, 0.3 * H2.dist(x, y))
        kx, ky, km = to(x), to(y), to(m)
        cross = (ky - kx)[0] * (km - kx)[1] - (ky - kx)[1] * (km - kx)[0]
        assert abs(cross) < 1e-12


class TestBallProjection:
    def test_inside(self):
        x = axis_point(0.5)
        assert sp.project_ball(H2, O, 1.0, x) is x

    def test_outside_collinear(self):
        x = axis_point(1.0, 2.0)
        p = sp.project_ball(H2, O, 1.0, x)
        assert H2.dist(O, p) == pytest.approx(1.0, abs=1e-12)
        assert H2.dist(p, x) == pytest.approx(H2.dist(O, x) - 1.0, abs=1e-12)

    def test_distance_three(self):
        x = axis_point(3.0)
        np.testing.assert_allclose(sp.project_ball(H2, O, 1.0, x), axis_point(1.0), atol=1e-12)

    def test_tree(self, tripod):
        t = tripod.tree
        p = sp.project_ball(tripod, t.point(node="l0"), 3.0, t.point(node="l1"))
        # lands one unit past the center toward l1
        assert tripod.dist(p, t.point(node="c")) == pytest.approx(1.0)
        assert tripod.dist(p, t.point(node="l1")) == pytest.approx(1.0)

    def test_idempotent(self):
        b = sp.Ball(H2, O, 1.5)
        rng = np.random.default_rng(1)
        for _ in range(20):
            x = H2.random_point(rng, radius=5.0)
            p = b.project(x)
            assert H2.dist(b.project(p), p) <= 1e-12


class TestSegmentProjection:
    def test_interior_foot(self):
        a, b = axis_point(-2.0), axis_point(3.0)
        s, p = sp.project_segment(H2, a, b, axis_point(0.5, 1.3))
        assert s == pytest.approx(2.5, abs=1e-12)

    def test_clamped(self):
        a, b = axis_point(0.0), axis_point(1.0)
        s, p = sp.project_segment(H2, a, b, axis_point(2.0, 0.7))
        assert s == pytest.approx(1.0, abs=1e-12)

    def test_on_segment(self):
        a, b = axis_point(0.0), axis_point(2.0)
        s, _ = sp.project_segment(H2, a, b, axis_point(1.25))
        assert s == pytest.approx(1.25, abs=1e-12)


class TestRayProjection:
    def test_on_ray(self):
        t, _ = sp.project_ray(H2, axis_ray(), axis_point(4.2))
        assert t == pytest.approx(4.2, abs=1e-10)

    @pytest.mark.parametrize("t0, h", [(0.5, 1.0), (3.0, 2.0), (1.7, -0.4), (6.0, 3.0)])
    def test_perpendicular_foot(self, t0, h):
        x = axis_point(t0, h)
        # independent oracle: the foot on the axis is atanh(x1 / x3)
        assert math.atanh(x[0] / x[2]) == pytest.approx(t0, abs=1e-12)
        t, c = sp.project_ray(H2, axis_ray(), x)
        assert t == pytest.approx(t0, abs=1e-10)
        # sampled distances near t0 are no smaller
        ray = axis_ray()
        d = H2.dist(x, c)
        for dt in (-1e-3, 1e-3, -0.1, 0.1):
            assert H2.dist(x, ray.at(t0 + dt)) >= d

    def test_behind_origin(self):
        t, c = sp.project_ray(H2, axis_ray(), axis_point(-2.0, 0.5))
        assert t == 0.0

    def test_tree_branch_point(self):
        t = rtree.MetricTree([("o", "a", 1), ("a", "b", 2), ("b", "e", 3), ("a", "s", 1.5)])
        space = sp.TreeSpace(t)
        ray = sp.Ray(space, t.point(node="o"), t.point(node="a"))
        assert ray.length == pytest.approx(6.0)
        tt, c = sp.project_ray(space, ray, t.point(node="s"))
        assert tt == pytest.approx(1.0, abs=1e-10)
        assert space.dist(c, t.point(node="a")) < 1e-10


class TestSetsAndIntersections:
    def test_tube(self):
        tube = sp.Tube(axis_ray(), 1.0)
        x = axis_point(2.0, 3.0)
        p = tube.project(x)
        assert H2.dist(p, axis_point(2.0)) == pytest.approx(1.0, abs=1e-10)
        assert tube.contains(axis_point(5.0, 0.9))
        assert not tube.contains(axis_point(5.0, 1.1))

    def test_half_space(self):
        hs = sp.HalfSpace.through(H2, O, [1.0, 0.0, 0.0])
        assert hs.contains(axis_point(-1.0))
        assert not hs.contains(axis_point(1.0))
        x = axis_point(2.0, 0.5)
        p = hs.project(x)
        assert abs(p[0]) < 1e-12
        # distance to the line {x1 = 0} is asinh |x1|
        assert H2.dist(p, x) == pytest.approx(math.asinh(x[0]), abs=1e-10)

    def test_intersection_lands_inside(self):
        k = sp.Intersection([sp.Ball(H2, O, 2.0), sp.HalfSpace.through(H2, O, [0.0, 1.0, 0.0])])
        rng = np.random.default_rng(2)
        for _ in range(20):
            p = k.project(H2.random_point(rng, radius=4.0))
            assert k.contains(p, tol=1e-9)
        assert k.diameter_bound() == 4.0


class TestNonexpansive:
    @pytest.mark.parametrize("kind", ["ball", "segment", "ray", "tube"])
    def test_h2(self, kind):
        sets = {
            "ball": sp.Ball(H2, axis_point(0.3, 0.2), 1.2),
            "segment": sp.Segment(H2, axis_point(-1.0, 0.4), axis_point(1.5, -0.3)),
            "ray": axis_ray(),
            "tube": sp.Tube(axis_ray(), 1.0),
        }
        K = sets[kind]
        rep = sp.nonexpansive_audit(H2, K.project, lambda r: H2.random_point(r, radius=4.0), 300,
                                    np.random.default_rng(3), name=kind)
        assert rep.ok, rep

    def test_tree(self):
        rng = np.random.default_rng(4)
        t = rtree.MetricTree([(str(rng.integers(i)), str(i), float(rng.uniform(0.2, 2))) for i in range(1, 30)], ["0"])
        space = sp.TreeSpace(t)
        ball = sp.Ball(space, t.point(node="0"), 2.0)
        rep = sp.nonexpansive_audit(space, ball.project, t.random_point, 500, rng)
        assert rep.ok

    def test_detects_expanding_map(self):
        rep = sp.nonexpansive_audit(H2, lambda x: mk.apply(mk.translation_along(O, x, 1.0), x),
                                    lambda r: H2.random_point(r, radius=2.0), 100, np.random.default_rng(0))
        assert not rep.ok
        assert rep.worst is not None


class TestBusemann:
    def test_h2(self):
        assert sp.busemann_audit(H2, trials=100, rng=0).ok

    def test_tree(self, tripod):
        rep = sp.busemann_audit(tripod, trials=100, rng=0, sampler=tripod.tree.random_point)
        assert rep.ok

    def test_circle_mock_violates(self):
        delta = 0.1
        quads = [(0.0, math.pi - delta, 0.0, -(math.pi - delta))]
        rep = sp.busemann_audit(CircleMetric(), quads=quads)
        assert not rep.ok
        assert rep.max_violation > 1.0


class TestProbe:
    def test_ball_bounded(self):
        assert sp.geodesic_bounded_probe(H2, sp.Ball(H2, O, 2.0), 10.0, rng=0).status == "bounded"

    def test_whole_plane_ray(self):
        v = sp.geodesic_bounded_probe(H2, sp.WholeSpace(H2), 50.0, rng=0)
        assert v.status == "ray"
        assert v.length >= 50.0

    def test_tube_depends_on_budget(self):
        tube = sp.Tube(axis_ray(), 1.0)
        small = sp.geodesic_bounded_probe(H2, tube, 8.0, rng=0, doublings=1)
        assert small.status == "unknown"
        large = sp.geodesic_bounded_probe(H2, tube, 8.0, rng=0)
        assert large.status == "ray"
        a, b = large.chord
        assert tube.contains(a) and tube.contains(b)

    def test_finite_tree_bounded(self, tripod):
        K = sp.WholeSpace(tripod)
        assert sp.geodesic_bounded_probe(tripod, K, 10.0, rng=0).status == "bounded"
