"""Metric trees: distances, segments, gluing, parsing and ray detection."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from catfix import rtree
from catfix.errors import GeometryError, TreeFormatError


@pytest.fixture
def star():
    return rtree.star_tree([1.0, 2.0, 3.0])


def tip(t, i):
    return t.point(node=f"l{i}")


def random_tree(rng, n):
    # random recursive tree with n nodes
    edges = [(str(rng.integers(i)), str(i), float(rng.uniform(0.1, 3.0))) for i in range(1, n)]
    return rtree.MetricTree(edges, ["0"])


class TestConstruction:
    def test_rejects_cycle(self):
        with pytest.raises(GeometryError):
            rtree.MetricTree([("a", "b", 1), ("b", "c", 1), ("c", "a", 1)])

    def test_rejects_nonpositive_length(self):
        with pytest.raises(GeometryError):
            rtree.MetricTree([("a", "b", 0.0)])

    def test_single_node(self):
        t = rtree.MetricTree([], ["only"])
        p = t.point(node="only")
        assert rtree.tree_dist(t, p, p) == 0.0

    def test_endpoint_offsets_canonicalize(self, star):
        assert star.point(0, 0.0) == star.point(node="c")
        assert star.point(0, 1.0) == star.point(node="l0")
        assert star.point(0, 1.0 - 1e-13) == star.point(node="l0")

    def test_offset_range(self, star):
        with pytest.raises(GeometryError):
            star.point(0, 1.5)

    def test_foreign_points(self, star):
        other = rtree.star_tree([1.0, 2.0, 3.0])
        with pytest.raises(GeometryError):
            rtree.tree_dist(star, tip(star, 0), tip(other, 1))


class TestDistances:
    def test_same_point(self, star):
        assert rtree.tree_dist(star, tip(star, 1), tip(star, 1)) == 0.0

    def test_edge_endpoints(self):
        t = rtree.MetricTree([("a", "b", 3.0)])
        assert rtree.tree_dist(t, t.point(node="a"), t.point(node="b")) == 3.0

    def test_through_center(self, star):
        assert rtree.tree_dist(star, tip(star, 0), tip(star, 2)) == 4.0

    def test_interior_points(self, star):
        p, q = star.point(1, 0.5), star.point(2, 2.5)
        assert rtree.tree_dist(star, p, q) == pytest.approx(3.0)
        assert rtree.tree_dist(star, p, star.point(1, 1.75)) == pytest.approx(1.25)

    def test_random_tree_metric(self):
        rng = np.random.default_rng(0)
        t = random_tree(rng, 30)
        pts = [t.random_point(rng) for _ in range(25)]
        for a in pts[:8]:
            for b in pts[:8]:
                for c in pts[:8]:
                    assert rtree.tree_dist(t, a, c) <= rtree.tree_dist(t, a, b) + rtree.tree_dist(t, b, c) + 1e-12


class TestSegments:
    def test_start(self, star):
        assert rtree.tree_segment(star, tip(star, 0), tip(star, 1), 0.0) == tip(star, 0)

    def test_end(self, star):
        p, q = tip(star, 0), tip(star, 1)
        assert rtree.tree_segment(star, p, q, rtree.tree_dist(star, p, q)) == q

    def test_center_crossing(self, star):
        assert rtree.tree_segment(star, tip(star, 0), tip(star, 1), 1.0) == star.point(node="c")

    def test_past_center(self, star):
        m = rtree.tree_segment(star, tip(star, 0), tip(star, 2), 2.5)
        assert rtree.tree_dist(star, m, star.point(node="c")) == pytest.approx(1.5)
        assert rtree.tree_dist(star, m, tip(star, 2)) == pytest.approx(1.5)

    def test_out_of_range(self, star):
        with pytest.raises(GeometryError):
            rtree.tree_segment(star, tip(star, 0), tip(star, 1), 3.5)

    def test_concatenation_random(self):
        rng = np.random.default_rng(1)
        t = random_tree(rng, 40)
        for _ in range(300):
            p, q = t.random_point(rng), t.random_point(rng)
            d = rtree.tree_dist(t, p, q)
            m = rtree.tree_segment(t, p, q, rng.random() * d)
            assert rtree.tree_dist(t, p, m) + rtree.tree_dist(t, m, q) == pytest.approx(d, abs=1e-12)

    def test_extend_picks_a_branch(self, star):
        p = star.point(0, 0.5)
        e = rtree.tree_extend(star, p, star.point(node="c"), 2.0)
        assert rtree.tree_dist(star, p, e) == pytest.approx(2.0)

    def test_extend_dead_end(self, star):
        assert rtree.tree_extend(star, star.point(node="c"), tip(star, 0), 1.5) is None


class TestGluing:
    def test_center_of_star(self, star):
        assert rtree.gluing_check(star, star.point(node="c"), tip(star, 0), tip(star, 2))

    def test_interior_point(self, star):
        x = rtree.tree_segment(star, tip(star, 0), tip(star, 2), 2.0)
        assert rtree.gluing_check(star, x, tip(star, 0), tip(star, 2))

    def test_vacuous(self, star):
        assert rtree.gluing_check(star, tip(star, 0), tip(star, 1), tip(star, 1))

    def test_random(self):
        rng = np.random.default_rng(2)
        t = random_tree(rng, 25)
        for _ in range(300):
            x, y, z = (t.random_point(rng) for _ in range(3))
            assert rtree.gluing_check(t, x, y, z)


class TestFourPoint:
    def test_star(self, star):
        pts = [tip(star, i) for i in range(3)] + [star.point(node="c")]
        assert rtree.four_point_gap(star, *pts) == 0.0

    def test_random_quadruples(self):
        rng = np.random.default_rng(3)
        t = random_tree(rng, 50)
        for _ in range(500):
            assert rtree.four_point_gap(t, *(t.random_point(rng) for _ in range(4))) <= 1e-12


class TestAngles:
    def test_branching(self, star):
        c = star.point(node="c")
        assert rtree.alexandrov_angle_tree(star, c, tip(star, 0), tip(star, 1)) == math.pi

    def test_shared_start(self, star):
        p = star.point(0, 0.5)
        assert rtree.alexandrov_angle_tree(star, p, tip(star, 1), tip(star, 2)) == 0.0


class TestParse:
    def test_roundtrip(self):
        t = rtree.parse_tree("# star\nedge c a 1\nedge c b 2.5  # trailing\n\n")
        assert rtree.tree_dist(t, t.point(node="a"), t.point(node="b")) == 3.5

    def test_single_node(self):
        t = rtree.parse_tree("node solo\n")
        assert t.nodes == ("solo",)

    @pytest.mark.parametrize("text, line", [
        ("edge a b 1\nedge b c x\n", 2),
        ("edge a b 1\nedge a b 2\n", 2),
        ("edge a b 1\nedge b c 1\nedge c a 1\n", 3),
        ("edge a b -1\n", 1),
        ("edge a a 1\n", 1),
        ("edge a b\n", 1),
        ("vertex a\n", 1),
        ("edge a b 1\nedge c d 1\n", 2),
    ])
    def test_errors_name_line(self, text, line):
        with pytest.raises(TreeFormatError, match=f"^line {line}:"):
            rtree.parse_tree(text)

    def test_empty(self):
        with pytest.raises(TreeFormatError):
            rtree.parse_tree("# nothing\n")

    def test_load(self, tmp_path):
        f = tmp_path / "t.tree"
        f.write_text("edge r s 2\n")
        assert rtree.load_tree(f).total_length == 2.0


class TestAutomorphism:
    def test_rotation_of_equal_star(self):
        t = rtree.star_tree([2.0, 2.0, 2.0])
        f = rtree.automorphism(t, {"l0": "l1", "l1": "l2", "l2": "l0"})
        assert f(t.point(node="l0")) == t.point(node="l1")
        p = t.point(0, 0.5)
        assert rtree.tree_dist(t, f(p), t.point(node="c")) == pytest.approx(0.5)
        rng = np.random.default_rng(4)
        for _ in range(100):
            a, b = t.random_point(rng), t.random_point(rng)
            assert rtree.tree_dist(t, f(a), f(b)) == pytest.approx(rtree.tree_dist(t, a, b), abs=1e-12)

    def test_rejects_length_change(self, star):
        with pytest.raises(GeometryError):
            rtree.automorphism(star, {"l0": "l1", "l1": "l0"})

    def test_rejects_non_permutation(self, star):
        with pytest.raises(GeometryError):
            rtree.automorphism(star, {"l0": "l1"})


class TestRayDetect:
    def test_finite_star(self, star):
        assert rtree.tree_ray_detect(star, 100.0).status == "bounded"

    def test_binary_generator(self):
        v = rtree.tree_ray_detect(rtree.binary_generator(1.0), 30.0)
        assert v.status == "ray"
        assert v.length >= 30.0
        assert len(v.witness) == 31

    def test_geometric_generator_bounded(self):
        v = rtree.tree_ray_detect(rtree.geometric_generator(0.5, 1.0), 2.5)
        assert v.status == "bounded"
        assert v.length < 2.0

    def test_budget_exhausted(self):
        # no tail bound and a budget beyond the depth cap
        v = rtree.tree_ray_detect(rtree.binary_generator(1.0), 100.0, depth_budget=10)
        assert v.status == "unknown"

    def test_subset_predicate(self):
        # only the all-zero branch, which is cut off at depth 3
        gen = rtree.binary_generator(1.0)
        v = rtree.tree_ray_detect(gen, 10.0, within=lambda n: all(c == 0 for c in n) and len(n) <= 3)
        assert v.status == "bounded"
        assert v.length == 3.0


@given(st.lists(st.floats(0.1, 5.0), min_size=2, max_size=6), st.data())
@settings(max_examples=60, deadline=None)
def test_star_tip_distances(legs, data):
    t = rtree.star_tree(legs)
    i = data.draw(st.integers(0, len(legs) - 1))
    j = data.draw(st.integers(0, len(legs) - 1))
    expected = 0.0 if i == j else legs[i] + legs[j]
    assert rtree.tree_dist(t, tip(t, i), tip(t, j)) == pytest.approx(expected)
