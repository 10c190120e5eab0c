"""Anchored contractions, Picard iteration, asymptotic centers and the solver."""
import math

import numpy as np
import pytest
from conftest import polar

from catfix import minkowski as mk
from catfix import rtree
from catfix import spaces as sp
from catfix.errors import AuditError, ConvergenceError, GeometryError
from catfix.fixpoint import (Contraction, NonexpansiveMap, Schedule, SolverConfig,
                             approx_sequence, asymptotic_center, counterexample_map, picard,
                             solve, t_contraction, write_trace, TRACE_COLUMNS)

H2 = sp.HyperbolicSpace()
O = H2.base_point()


def axis_point(t, h=0.0):
    return np.array([math.sinh(t) * math.cosh(h), math.sinh(h), math.cosh(t) * math.cosh(h)])


def rotation_map(center, angle):
    R = mk.rotation_about(center, angle)
    return NonexpansiveMap(lambda x: mk.apply(R, x), H2, "rotation")


class TestSchedule:
    def test_harmonic(self):
        s = Schedule()
        assert [s(n) for n in (1, 2, 9)] == [0.5, 1 / 3, 0.1]

    def test_scaled_and_power(self):
        assert Schedule("harmonic", scale=8)(8) == 0.5
        assert Schedule("power", power=2)(1) == 0.25

    def test_rejects(self):
        with pytest.raises(GeometryError):
            Schedule("linear")
        with pytest.raises(GeometryError):
            Schedule()(0)


class TestPicard:
    def test_planar_contraction(self):
        plane = sp.EuclideanSpace()
        f = Contraction(lambda x: 0.5 * x + np.array([1.0, 0.0]), 0.5, plane)
        x, its = picard(f, np.zeros(2), tol=1e-12)
        np.testing.assert_allclose(x, [2.0, 0.0], atol=1e-12)
        assert its < 60

    def test_a_priori_bound(self):
        plane = sp.EuclideanSpace()
        f = Contraction(lambda x: 0.9 * x + 1.0, 0.9, plane)
        x, _ = picard(f, np.array([0.0]), tol=1e-8)
        assert abs(x[0] - 10.0) <= 1e-8

    def test_lying_factor_is_caught(self):
        plane = sp.EuclideanSpace()
        f = Contraction(lambda x: 0.99 * x + 1.0, 0.5, plane)
        with pytest.raises(AuditError):
            picard(f, np.array([0.0]), tol=1e-12)

    def test_budget(self):
        plane = sp.EuclideanSpace()
        f = Contraction(lambda x: 0.999 * x, 0.999, plane)
        with pytest.raises(ConvergenceError) as err:
            picard(f, np.array([1.0]), tol=1e-12, budget=10)
        assert err.value.diagnostics["budget"] == 10

    def test_rejects_non_contraction(self):
        with pytest.raises(AuditError):
            picard(Contraction(lambda x: x, 1.0, H2), O)


class TestContractionFamily:
    def test_weight_range(self):
        with pytest.raises(GeometryError):
            t_contraction(rotation_map(O, 1.0), O, 0.0)

    def test_rotation_about_anchor(self):
        p = polar(0.5, 0.3)
        run = approx_sequence(rotation_map(p, math.pi / 2), p, N=5)
        for z in run.iterates:
            assert H2.dist(z, p) < 1e-12

    def test_translation_half_weight(self):
        # theta on the axis: z = c((1 - t) l / t), so at t = 1/2 the residual equals d(theta, z) = l
        ell = 0.8
        M = mk.translation_along(O, axis_point(1.0), ell)
        T = NonexpansiveMap(lambda x: mk.apply(M, x), H2, "translation")
        z, _ = picard(t_contraction(T, O, 0.5), O, tol=1e-12)
        assert H2.dist(O, z) == pytest.approx(ell, abs=1e-10)
        assert H2.dist(z, T(z)) == pytest.approx(ell, abs=1e-10)

    def test_residual_identity(self):
        T = rotation_map(polar(0.4, 1.0), 2.0)
        run = approx_sequence(T, polar(1.5, -0.5), Schedule(), N=40)
        assert np.max(run.identity_errors()) < 1e-6
        assert run.anchor_dists[-1] < 3.0

    def test_monitor_stops(self):
        T = rotation_map(O, 1.0)
        run = approx_sequence(T, polar(1.0, 0.0), N=50, monitor=lambda r: len(r) >= 3)
        assert len(run) == 3

    def test_trace(self, tmp_path):
        run = approx_sequence(rotation_map(O, 1.0), polar(1.0, 0.0), N=4)
        write_trace(tmp_path / "t.csv", [run, run])
        rows = (tmp_path / "t.csv").read_text().splitlines()
        assert rows[0] == ",".join(TRACE_COLUMNS)
        assert len(rows) == 9
        assert rows[-1].startswith("8,") and rows[-1].endswith(",1")


class TestAsymptoticCenter:
    def test_constant_window(self):
        p = polar(1.0, 2.0)
        ac = asymptotic_center(H2, [p] * 5)
        assert ac.radius == 0.0

    def test_two_points_midpoint(self):
        a, b = polar(1.0, 0.0), polar(1.5, 2.0)
        ac = asymptotic_center(H2, [a, b])
        assert ac.radius == pytest.approx(H2.dist(a, b) / 2, abs=1e-8)
        assert H2.dist(ac.center, H2.geodesic_point(a, b, H2.dist(a, b) / 2)) < 1e-4

    def test_window_trims(self):
        far = polar(5.0, 0.0)
        pts = [far] + [polar(0.2, k) for k in range(6)]
        ac = asymptotic_center(H2, pts, window=6)
        assert ac.window == 6
        assert ac.radius < 0.25

    def test_equilateral_center(self):
        pts = [polar(1.0, 2 * math.pi * k / 3) for k in range(3)]
        ac = asymptotic_center(H2, pts)
        assert H2.dist(ac.center, O) < 1e-4
        assert ac.radius == pytest.approx(1.0, abs=1e-8)

    def test_plane(self):
        plane = sp.EuclideanSpace()
        pts = [np.array(p, float) for p in ((0, 0), (2, 0), (1, 0.5))]
        ac = asymptotic_center(plane, pts)
        np.testing.assert_allclose(ac.center, [1.0, 0.0], atol=1e-6)
        assert ac.radius == pytest.approx(1.0, abs=1e-8)

    def test_star_tips(self):
        space = sp.TreeSpace(rtree.star_tree([2.0, 2.0, 2.0]))
        t = space.tree
        ac = asymptotic_center(space, [t.point(node=f"l{i}") for i in range(3)])
        assert ac.center == t.point(node="c")
        assert ac.radius == 2.0

    def test_budget(self):
        with pytest.raises(GeometryError):
            asymptotic_center(H2, [O, polar(5.0, 0.0)], diameter_budget=1.0)

    def test_empty(self):
        with pytest.raises(GeometryError):
            asymptotic_center(H2, [])


class TestCounterexampleMap:
    def test_shift(self):
        ray = sp.Ray(H2, O, axis_point(1.0))
        T = counterexample_map(H2, ray)
        np.testing.assert_allclose(T(axis_point(2.0)), axis_point(3.0), atol=1e-10)
        # off-ray point at perpendicular distance h from c(t0) goes to c(t0 + 1)
        np.testing.assert_allclose(T(axis_point(1.5, 0.7)), axis_point(2.5), atol=1e-9)

    def test_fixed_point_free(self):
        T = counterexample_map(H2, sp.Ray(H2, O, axis_point(1.0)))
        rng = np.random.default_rng(0)
        for _ in range(50):
            x = H2.random_point(rng, radius=3.0)
            assert H2.dist(x, T(x)) >= 1.0 - 1e-9

    def test_nonexpansive(self):
        ray = sp.Ray(H2, O, axis_point(1.0))
        T = counterexample_map(H2, ray)
        assert T.audit(lambda r: H2.random_point(r, radius=3.0), 300, rng=1).ok

    def test_requires_set_containing_ray(self):
        ray = sp.Ray(H2, O, axis_point(1.0))
        with pytest.raises(GeometryError):
            counterexample_map(H2, ray, sp.Ball(H2, O, 2.0))

    def test_bounded_tree_ray(self):
        space = sp.TreeSpace(rtree.star_tree([2.0, 2.0]))
        t = space.tree
        ray = sp.Ray(space, t.point(node="l0"), t.point(node="c"))
        with pytest.raises(GeometryError):
            counterexample_map(space, ray)


class TestSolve:
    def test_ball_rotation_converges(self, solved):
        sc, res = solved("ball_rotation")
        assert res.verdict == "converged"
        assert res.residual <= 1e-8
        assert res.outer_iterations <= 1000
        assert H2.dist(res.point, sc.space.point([0.3, 0.2])) < 1e-6

    def test_ray_tube_diverges(self, solved):
        sc, res = solved("ray_tube")
        assert res.verdict == "divergent"
        w = res.witness
        assert w.length > sc.config.divergence_threshold
        # the guide sits on the core ray, up to the tube width
        assert sc.K.ray.space.dist(w.guide, sc.K.project(w.guide)) < 1e-9
        assert w.spread < 1e-6

    def test_tree_converges(self, solved):
        sc, res = solved("star_branch_shift")
        assert res.verdict == "converged"
        assert sc.space.dist(res.point, sc.space.tree.point(node="c")) <= 1e-8

    def test_budget_unknown(self, solved):
        _, res = solved("exhausted")
        assert res.verdict == "unknown"
        assert res.outer_iterations == 20

    def test_refuses_expanding_map(self):
        T = NonexpansiveMap(lambda x: mk.apply(mk.translation_along(O, x, 0.5), x) if H2.dist(O, x) > 1e-9 else x,
                            H2, "push")
        K = sp.Ball(H2, O, 2.0)
        with pytest.raises(AuditError):
            solve(H2, K, T, SolverConfig(audit_samples=64))

    def test_identity_has_anchor_as_fixed_point(self):
        K = sp.Ball(H2, O, 1.0)
        T = NonexpansiveMap(lambda x: x, H2, "identity")
        a = polar(0.5, 1.0)
        res = solve(H2, K, T, SolverConfig(anchor=a, audit_samples=16))
        assert res.verdict == "converged"
        assert H2.dist(res.point, a) < 1e-9
