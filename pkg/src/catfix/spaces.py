"""Uniform geodesic-space interface, convex sets and their metric projections.

Every space exposes two oracles, ``dist`` and ``geodesic_point``; the
constructions here (convex combinations, projections, Busemann audits,
boundedness probes) use nothing else, so they run unchanged on H^n, the
model planes and metric trees.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import minkowski as mk
from . import rtree
from .errors import ConvergenceError, GeometryError
from .model_spaces import as_kappa

class GeodesicSpace:
    """Base class.  Subclasses implement ``dist`` and ``geodesic_point``."""

    tag = "abstract"

    def dist(self, x, y) -> float:
        raise NotImplementedError

    def geodesic_point(self, x, y, s):
        raise NotImplementedError

    def extend(self, x, y, s):
        """Point at arc ``s`` along a geodesic from ``x`` through ``y``; ``None`` if it ends."""
        raise NotImplementedError

    def angle(self, x, y, z) -> float:
        raise NotImplementedError

    def base_point(self):
        raise NotImplementedError

    def random_point(self, rng, center=None, radius: float = 1.0):
        raise NotImplementedError

    def chart(self, center):
        """``(to_chart, from_chart, dim)`` for a chart in which geodesics are straight
        lines, or ``None`` when the space has no such chart."""
        return None

    def same(self, x, y, tol: float = 0.0) -> bool:
        return self.dist(x, y) <= tol

    def fmt(self, x) -> str:
        return " ".join(f"{v:.17g}" for v in np.ravel(x))


class HyperbolicSpace(GeodesicSpace):
    """H^n in the hyperboloid model."""

    tag = "hyperbolic"

    def __init__(self, dim: int = 2):
        self.dim = dim

    def dist(self, x, y):
        return float(mk.hdist(x, y))

    def dists(self, x, pts):
        return mk.hdist(x, np.asarray(pts))

    def geodesic_point(self, x, y, s):
        return mk.geodesic_point(x, y, s)

    def extend(self, x, y, s):
        return mk.extend(x, y, s)

    def angle(self, x, y, z):
        return float(mk.alexandrov_angle(x, y, z))

    def base_point(self):
        return mk.base_point(self.dim)

    def point(self, chart_coords):
        return mk.lift(chart_coords)

    def random_point(self, rng, center=None, radius=1.0):
        center = self.base_point() if center is None else center
        v = rng.normal(size=self.dim)
        v *= radius * rng.random() ** (1.0 / self.dim) / np.linalg.norm(v)
        frame = mk.tangent_frame(center)
        return mk.exp_map(center, v @ frame)

    def chart(self, center):
        # Klein chart centred at ``center``: hyperbolic geodesics are chords.
        b = mk.boost_to(center)
        binv = mk.inverse_isometry(b)

        def to_chart(p):
            q = np.asarray(p) @ binv.T
            return q[..., :-1] / q[..., -1:]

        def from_chart(k):
            k = np.asarray(k, dtype=float)
            r2 = np.sum(k * k, axis=-1, keepdims=True)
            if np.any(r2 >= 1.0):
                raise GeometryError("Klein coordinates must lie in the open unit ball")
            q = np.concatenate([k, np.ones_like(r2)], axis=-1) / np.sqrt(1.0 - r2)
            return mk.reproject(q @ b.T)

        return to_chart, from_chart, self.dim


class ScaledHyperbolicSpace(HyperbolicSpace):
    """M^2_kappa for kappa < 0: H^2 with distances divided by sqrt(-kappa)."""

    tag = "model"

    def __init__(self, kappa, dim: int = 2):
        super().__init__(dim)
        self.kappa = as_kappa(kappa)
        if self.kappa.flat:
            raise GeometryError("use EuclideanSpace for kappa = 0")
        self.k = self.kappa.scale

    def dist(self, x, y):
        return float(mk.hdist(x, y)) / self.k

    def dists(self, x, pts):
        return mk.hdist(x, np.asarray(pts)) / self.k

    def geodesic_point(self, x, y, s):
        return mk.geodesic_point(x, y, s * self.k)

    def extend(self, x, y, s):
        return mk.extend(x, y, s * self.k)

    def random_point(self, rng, center=None, radius=1.0):
        return super().random_point(rng, center, radius * self.k)


class EuclideanSpace(GeodesicSpace):
    tag = "plane"

    def __init__(self, dim: int = 2):
        self.dim = dim

    def dist(self, x, y):
        return float(np.linalg.norm(np.asarray(x, float) - np.asarray(y, float)))

    def dists(self, x, pts):
        return np.linalg.norm(np.asarray(pts, float) - np.asarray(x, float), axis=-1)

    def geodesic_point(self, x, y, s):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        d = self.dist(x, y)
        if s < -mk.TOL_GEO or s > d + mk.TOL_GEO:
            raise GeometryError(f"arc {s} outside [0, {d}]")
        return x.copy() if d == 0 else x + (y - x) * (min(max(s, 0.0), d) / d)

    def extend(self, x, y, s):
        x = np.asarray(x, float)
        d = self.dist(x, y)
        if d == 0:
            raise GeometryError("cannot extend a degenerate chord")
        return x + (np.asarray(y, float) - x) * (s / d)

    def angle(self, x, y, z):
        u = np.asarray(y, float) - x
        v = np.asarray(z, float) - x
        nu, nv = np.linalg.norm(u), np.linalg.norm(v)
        if nu < mk.TOL_GEO or nv < mk.TOL_GEO:
            raise GeometryError("degenerate vertex")
        u, v = u / nu, v / nv
        return float(2.0 * math.atan2(np.linalg.norm(u - v), np.linalg.norm(u + v)))

    def base_point(self):
        return np.zeros(self.dim)

    def point(self, coords):
        return np.asarray(coords, dtype=float)

    def random_point(self, rng, center=None, radius=1.0):
        center = self.base_point() if center is None else np.asarray(center, float)
        v = rng.normal(size=self.dim)
        return center + v * radius * rng.random() ** (1.0 / self.dim) / np.linalg.norm(v)

    def chart(self, center):
        c = np.asarray(center, float)
        return (lambda p: np.asarray(p, float) - c), (lambda k: np.asarray(k, float) + c), self.dim


class TreeSpace(GeodesicSpace):
    tag = "tree"

    def __init__(self, tree: rtree.MetricTree):
        self.tree = tree

    def dist(self, x, y):
        return rtree.tree_dist(self.tree, x, y)

    def geodesic_point(self, x, y, s):
        return rtree.tree_segment(self.tree, x, y, s)

    def extend(self, x, y, s):
        return rtree.tree_extend(self.tree, x, y, s)

    def angle(self, x, y, z):
        return rtree.alexandrov_angle_tree(self.tree, x, y, z)

    def base_point(self):
        return self.tree.point(node=self.tree.root)

    def random_point(self, rng, center=None, radius=math.inf):
        if center is None or not math.isfinite(radius):
            return self.tree.random_point(rng)
        return project_ball(self, center, radius, self.tree.random_point(rng))

    def same(self, x, y, tol=0.0):
        return x == y or self.dist(x, y) <= tol

    def fmt(self, x):
        c = self.tree.coords(x)
        return f"node {c[1]}" if c[0] == "node" else f"edge {c[1]} offset {c[2]:.17g}"


def model_space(kappa, dim: int = 2) -> GeodesicSpace:
    kappa = as_kappa(kappa)
    return EuclideanSpace(dim) if kappa.flat else ScaledHyperbolicSpace(kappa, dim)


def combine(space: GeodesicSpace, x, y, t: float):
    """Point on ``[x, y]`` at distance ``t d(x, y)`` from ``x``; ``t`` in [0, 1]."""
    if not (-1e-12 <= t <= 1.0 + 1e-12):
        raise GeometryError(f"combination weight {t} outside [0, 1]")
    t = min(max(t, 0.0), 1.0)
    if t == 0.0:
        return x
    if t == 1.0:
        return y
    return space.geodesic_point(x, y, t * space.dist(x, y))


# -- convex sets --------------------------------------------------------------

class ConvexSet:
    """Closed convex subset with a projection oracle."""

    def __init__(self, space: GeodesicSpace):
        self.space = space

    def project(self, x):
        raise NotImplementedError

    def contains(self, x, tol: float = 1e-9) -> bool:
        return self.space.dist(x, self.project(x)) <= tol

    def diameter_bound(self) -> float:
        return math.inf

    def sample(self, rng, radius: float = 3.0):
        """Random point of the set (``radius`` truncates unbounded sets)."""
        return self.project(self.space.random_point(rng, radius=radius))


class WholeSpace(ConvexSet):
    def project(self, x):
        return x

    def contains(self, x, tol=1e-9):
        return True

    def diameter_bound(self):
        if isinstance(self.space, TreeSpace):
            t = self.space.tree
            return max(t.node_dist(a, b) for a in t.nodes for b in t.nodes)
        return math.inf


class Ball(ConvexSet):
    def __init__(self, space, center, radius: float):
        super().__init__(space)
        if radius < 0:
            raise GeometryError("radius must be nonnegative")
        self.center = center
        self.radius = float(radius)

    def project(self, x):
        return project_ball(self.space, self.center, self.radius, x)

    def contains(self, x, tol=1e-9):
        return self.space.dist(self.center, x) <= self.radius + tol

    def diameter_bound(self):
        return 2.0 * self.radius

    def sample(self, rng, radius=None):
        return self.space.random_point(rng, center=self.center, radius=self.radius)


def project_ball(space, center, radius, x):
    """Nearest point of the closed ball ``B(center, radius)`` to ``x``."""
    d = space.dist(center, x)
    if d <= radius:
        return x
    return space.geodesic_point(center, x, radius)


class Segment(ConvexSet):
    def __init__(self, space, a, b):
        super().__init__(space)
        self.a, self.b = a, b
        self.length = space.dist(a, b)

    def at(self, s):
        return self.space.geodesic_point(self.a, self.b, min(max(s, 0.0), self.length))

    def project(self, x):
        return project_segment(self.space, self.a, self.b, x)[1]

    def diameter_bound(self):
        return self.length

    def sample(self, rng, radius=None):
        return self.at(rng.random() * self.length)


def _first_variation_root(space, at, x, hi: float, tol: float, max_iter: int = 200):
    """Minimizer of ``s -> d(x, at(s))`` on ``[0, hi]`` for a geodesic ``at``.

    Bisection on the sign of the first variation: the distance decreases past
    ``s`` exactly when the angle at ``at(s)`` between ``x`` and ``at(0)``
    exceeds pi/2.  Unlike comparing distance values this stays accurate to
    rounding level, since the distance is flat at its minimum.
    """
    start = at(0.0)

    def ahead(s):
        p = at(s)
        try:
            if s <= 0.0:
                return space.angle(p, x, at(min(hi, 1.0))) < 0.5 * math.pi
            return space.angle(p, x, start) > 0.5 * math.pi
        except GeometryError:  # x coincides with the probe point
            return None

    if hi <= 0.0:
        return 0.0
    for s in (0.0, hi):
        if ahead(s) is None:
            return s
    if not ahead(0.0):
        return 0.0
    if ahead(hi):
        return hi
    lo = 0.0
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        a = ahead(mid)
        if a is None:
            return mid
        lo, hi = (mid, hi) if a else (lo, mid)
        if hi - lo <= tol:
            break
    return 0.5 * (lo + hi)


def project_segment(space, a, b, x, tol: float = 1e-14):
    """``(s*, point)``: nearest point of ``[a, b]`` to ``x``."""
    length = space.dist(a, b)
    if length == 0:
        return 0.0, a
    s = _first_variation_root(space, lambda u: space.geodesic_point(a, b, min(u, length)),
                              x, length, tol * max(1.0, length))
    return s, space.geodesic_point(a, b, s)


class Ray(ConvexSet):
    """Geodesic ray ``c(t)``, ``t >= 0``, from ``origin`` through ``through``.

    In trees the ray follows branches in node order and stops at a leaf;
    ``length`` records where it ends (``inf`` in H^n).
    """

    def __init__(self, space, origin, through, length: float | None = None):
        super().__init__(space)
        self.origin = origin
        self.through = through
        step = space.dist(origin, through)
        if step == 0:
            raise GeometryError("ray direction is degenerate")
        self._step = step
        if length is None:
            length = math.inf if not isinstance(space, TreeSpace) else _tree_ray_length(space, origin, through)
        self.length = float(length)

    def at(self, t: float):
        if t < -mk.TOL_GEO or t > self.length + mk.TOL_GEO:
            raise GeometryError(f"ray parameter {t} outside [0, {self.length}]")
        t = min(max(t, 0.0), self.length)
        if t <= self._step:
            return self.space.geodesic_point(self.origin, self.through, t)
        p = self.space.extend(self.origin, self.through, t)
        if p is None:
            raise GeometryError(f"ray ends before parameter {t}")
        return p

    def project(self, x):
        return project_ray(self.space, self, x)[1]

    def diameter_bound(self):
        return self.length

    def sample(self, rng, radius=3.0):
        top = min(self.length, radius)
        return self.at(rng.random() * top)


def _tree_ray_length(space, origin, through):
    # binary search on the extension oracle for the first leaf reached
    lo, hi = space.dist(origin, through), space.tree.total_length
    if space.extend(origin, through, hi) is not None:
        return hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if space.extend(origin, through, mid) is None:
            hi = mid
        else:
            lo = mid
        if hi - lo < 1e-13 * max(1.0, hi):
            break
    return lo


def project_ray(space, ray: Ray, x, tol: float = 1e-14):
    """``(t*, c(t*))`` minimizing ``t -> d(x, c(t))`` over the ray.

    The distance is convex along geodesics in CAT(0) spaces and
    ``d(x, c(t)) >= t - d(x, c(0))`` puts the minimizer in ``[0, 2 d(x, c(0))]``.
    """
    d0 = space.dist(x, ray.origin)
    hi = min(ray.length, 2.0 * d0)
    t = _first_variation_root(space, ray.at, x, hi, tol * max(1.0, hi))
    return t, ray.at(t)


class Tube(ConvexSet):
    """Closed ``width``-neighbourhood of a ray (a thickened ray)."""

    def __init__(self, ray: Ray, width: float):
        super().__init__(ray.space)
        if width < 0:
            raise GeometryError("width must be nonnegative")
        self.ray = ray
        self.width = float(width)

    def project(self, x):
        _, c = project_ray(self.space, self.ray, x)
        return project_ball(self.space, c, self.width, x)

    def contains(self, x, tol=1e-9):
        _, c = project_ray(self.space, self.ray, x)
        return self.space.dist(c, x) <= self.width + tol

    def sample(self, rng, radius=3.0):
        c = self.ray.at(rng.random() * min(self.ray.length, radius))
        return self.space.random_point(rng, center=c, radius=self.width)


class HalfSpace(ConvexSet):
    """``{x : <x, m> <= 0}`` in H^n for a unit spacelike normal ``m``.

    Build with :meth:`through` from a boundary point and an outward tangent.
    """

    def __init__(self, space: HyperbolicSpace, normal):
        super().__init__(space)
        m = np.asarray(normal, float)
        n2 = mk.mink_form(m, m)
        if n2 <= 0:
            raise GeometryError("normal must be spacelike")
        self.normal = m / math.sqrt(n2)

    @classmethod
    def through(cls, space, point, outward):
        t = mk.tangent(point, outward)
        return cls(space, t.dir)

    def project(self, x):
        a = mk.mink_form(x, self.normal)
        if a <= 0:
            return x
        return mk.reproject((np.asarray(x) - a * self.normal) / math.sqrt(1.0 + a * a))

    def contains(self, x, tol=1e-9):
        return mk.mink_form(x, self.normal) <= tol * (1.0 + abs(np.asarray(x)[-1]))


class Intersection(ConvexSet):
    """Intersection of convex sets; projection by cyclic alternating projections.

    The result lies in the intersection (up to ``tol``) but is in general only
    an approximation of the nearest point.
    """

    def __init__(self, parts, tol: float = 1e-12, max_sweeps: int = 10_000):
        parts = list(parts)
        if not parts:
            raise GeometryError("empty intersection")
        super().__init__(parts[0].space)
        self.parts = parts
        self.tol = tol
        self.max_sweeps = max_sweeps

    def project(self, x):
        y = x
        for sweep in range(self.max_sweeps):
            prev = y
            for part in self.parts:
                y = part.project(y)
            if self.space.dist(prev, y) <= self.tol:
                return y
        raise ConvergenceError("alternating projections did not settle",
                               {"sweeps": self.max_sweeps, "last_step": self.space.dist(prev, y)})

    def contains(self, x, tol=1e-9):
        return all(p.contains(x, tol) for p in self.parts)

    def diameter_bound(self):
        return min(p.diameter_bound() for p in self.parts)

    def sample(self, rng, radius=3.0):
        return self.project(self.parts[0].sample(rng, radius))


# -- audits ---------------------------------------------------------------------

@dataclass
class AuditReport:
    name: str
    trials: int
    max_violation: float
    tol: float
    worst: object = None

    @property
    def ok(self) -> bool:
        return self.max_violation <= self.tol


def nonexpansive_audit(space, proj, sampler, pairs: int, rng, slack: float = 1e-9,
                       name: str = "projection") -> AuditReport:
    """Sample ``pairs`` point pairs and record ``max(d(Px, Py) - d(x, y))``."""
    worst, where = -math.inf, None
    for _ in range(pairs):
        x, y = sampler(rng), sampler(rng)
        v = space.dist(proj(x), proj(y)) - space.dist(x, y)
        if v > worst:
            worst, where = v, (x, y)
    return AuditReport(name, pairs, worst, slack, where)


def busemann_audit(space, trials: int = 200, rng=None, sampler=None, quads=None,
                   grid: int = 11, tol: float = 1e-8) -> AuditReport:
    """Busemann convexity: for geodesics ``sigma = [a, b]``, ``tau = [c, d]``
    check ``rho(sigma(t l1), tau(t l2)) <= (1 - t) rho(a, c) + t rho(b, d)`` on a t-grid.

    ``quads`` supplies explicit ``(a, b, c, d)`` tuples; otherwise ``trials``
    quadruples are drawn from ``sampler`` (default: ``space.random_point``).
    """
    rng = np.random.default_rng(rng)
    sampler = sampler or (lambda r: space.random_point(r, radius=2.0))
    if quads is None:
        quads = [tuple(sampler(rng) for _ in range(4)) for _ in range(trials)]
    ts = np.linspace(0.0, 1.0, grid)
    worst, where = -math.inf, None
    for a, b, c, d in quads:
        l1, l2 = space.dist(a, b), space.dist(c, d)
        ac, bd = space.dist(a, c), space.dist(b, d)
        for t in ts:
            lhs = space.dist(space.geodesic_point(a, b, t * l1), space.geodesic_point(c, d, t * l2))
            v = lhs - ((1.0 - t) * ac + t * bd)
            if v > worst:
                worst, where = v, (a, b, c, d, float(t))
    return AuditReport("busemann", len(quads), float(worst), tol, where)


@dataclass
class ProbeVerdict:
    status: str  # "bounded" | "ray" | "unknown"
    chord: tuple = field(default=())
    length: float = 0.0


def geodesic_bounded_probe(space, K: ConvexSet, length_budget: float, rng=None,
                           trials: int = 8, doublings: int = 40,
                           sample_radius: float = 3.0) -> ProbeVerdict:
    """Semi-decision for geodesic boundedness of ``K``.

    Each trial takes a chord ``[a, b]`` in ``K`` and repeatedly doubles it
    along its geodesic, pulling the new endpoint back into ``K`` by projection
    (convexity keeps the whole chord inside).  A chord of length at least
    ``length_budget`` is returned as a ray witness.  If the chords stall and
    ``K`` carries a diameter bound below the budget the verdict is
    ``bounded``; otherwise ``unknown``.  A trial whose extension leaves the
    accurate range of the model (hyperboloid coordinates beyond roughly
    ``exp(10)``) also stalls.
    """
    rng = np.random.default_rng(rng)
    if K.diameter_bound() < length_budget:
        return ProbeVerdict("bounded", (), K.diameter_bound())
    best = ((), 0.0)
    for _ in range(trials):
        a, b = K.sample(rng, sample_radius), K.sample(rng, sample_radius)
        ln = space.dist(a, b)
        if ln == 0:
            continue
        ref = b  # direction point; kept near a while projections leave the chord alone
        for _ in range(doublings):
            try:
                raw = space.extend(a, ref, 2.0 * ln)
                if raw is None:
                    break
                c = K.project(raw)
                new = space.dist(a, c)
            except GeometryError:  # out of floating-point range for this model
                break
            if new <= ln * (1.0 + 1e-9):
                break
            b, ln = c, new
            if c is not raw:
                ref = c
            if ln >= length_budget:
                return ProbeVerdict("ray", (a, b), ln)
        if ln > best[1]:
            best = ((a, b), ln)
    return ProbeVerdict("unknown", best[0], best[1])
