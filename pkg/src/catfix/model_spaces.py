"""Model planes M^2_kappa (kappa <= 0), comparison triangles and CAT(kappa) audits.

For ``kappa < 0`` the model is H^2 with every distance multiplied by
``1 / sqrt(-kappa)``; realizations therefore store hyperboloid points whose
hyperbolic side lengths are ``sqrt(-kappa)`` times the model lengths.

Triangle labels: ``TriangleSpec(xy, xz, yz)`` gives the three side lengths by
the pair of vertices they join, so the angle at ``x`` sits between the first
two entries.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import minkowski as mk
from .errors import GeometryError

TOL_CAT = 1e-8
TOL_SIDE = 1e-12
VERTICES = ("x", "y", "z")
SIDES = ("xy", "xz", "yz")


@dataclass(frozen=True)
class Kappa:
    value: float = -1.0

    def __post_init__(self):
        if not math.isfinite(self.value) or self.value > 0:
            raise GeometryError(f"curvature bound must be finite and <= 0, got {self.value}")

    @property
    def scale(self) -> float:
        """Factor turning model lengths into unit-curvature hyperbolic lengths."""
        return math.sqrt(-self.value)

    @property
    def flat(self) -> bool:
        return self.value == 0.0


def as_kappa(k) -> Kappa:
    return k if isinstance(k, Kappa) else Kappa(float(k))


@dataclass(frozen=True)
class TriangleSpec:
    xy: float
    xz: float
    yz: float

    def __post_init__(self):
        s = (self.xy, self.xz, self.yz)
        if any(not math.isfinite(v) or v <= 0 for v in s):
            raise GeometryError(f"side lengths must be positive and finite: {s}")
        for i in range(3):
            others = s[(i + 1) % 3] + s[(i + 2) % 3]
            if s[i] > others + TOL_SIDE * max(1.0, others):
                raise GeometryError(f"triangle inequality violated: {s}")

    def side(self, p: str, q: str) -> float:
        key = "".join(sorted((p, q)))
        if key not in SIDES:
            raise GeometryError(f"no side joining {p!r} and {q!r}")
        return getattr(self, key)

    def adjacent(self, at: str) -> tuple[float, float, float]:
        """(first adjacent side, second adjacent side, opposite side) for a vertex."""
        if at not in VERTICES:
            raise GeometryError(f"unknown vertex {at!r}")
        u, v = [w for w in VERTICES if w != at]
        return self.side(at, u), self.side(at, v), self.side(u, v)


def _planar_angle(b, c, a):
    cos = (b * b + c * c - a * a) / (2.0 * b * c)
    if cos > 1 + mk.CLAMP_TOL or cos < -1 - mk.CLAMP_TOL:
        raise GeometryError(f"cosine {cos} out of range")
    return math.acos(min(1.0, max(-1.0, cos)))


def comparison_angle(spec: TriangleSpec, at: str = "x") -> float:
    """Euclidean comparison angle at a vertex (planar law of cosines)."""
    b, c, a = spec.adjacent(at)
    if b < mk.TOL_GEO or c < mk.TOL_GEO:
        raise GeometryError("degenerate vertex")
    return _planar_angle(b, c, a)


def model_angle(kappa, spec: TriangleSpec, at: str = "x") -> float:
    """Vertex angle of the comparison triangle in M^2_kappa."""
    kappa = as_kappa(kappa)
    if kappa.flat:
        return comparison_angle(spec, at)
    b, c, a = spec.adjacent(at)
    k = kappa.scale
    return float(mk.law_angle(b * k, c * k, a * k))


# side index -> (first vertex, second vertex); vertices indexed x=0, y=1, z=2
_ENDS = np.array([[0, 1], [0, 2], [1, 2]])
# shared vertex of two distinct sides
_SHARED = np.array([[-1, 0, 1], [0, -1, 2], [1, 2, -1]])


def _vertex_angles(kappa: Kappa, sides):
    """Comparison angles at x, y, z for side stacks ``(..., 3)`` ordered xy, xz, yz."""
    xy, xz, yz = sides[..., 0], sides[..., 1], sides[..., 2]
    if kappa.flat:
        law = _planar_angles
    else:
        k = kappa.scale
        law = lambda b, c, a: mk.law_angle(b * k, c * k, a * k)  # noqa: E731
    return np.stack([law(xy, xz, yz), law(xy, yz, xz), law(xz, yz, xy)], axis=-1)


def _separation(kappa: Kappa, sides, angles, i1, t1, i2, t2):
    """Model distance between comparison points ``(side i1, arc t1)`` and ``(i2, t2)``.

    Both points are measured from the vertex their sides share and joined by
    the half-angle cosine law, so long sides keep full relative accuracy
    (placing the points on the hyperboloid loses it like ``e^{2d}``).
    """
    i1, i2 = np.asarray(i1), np.asarray(i2)
    t1, t2 = np.asarray(t1, dtype=float), np.asarray(t2, dtype=float)
    rows = np.arange(np.shape(i1)[0]) if np.ndim(i1) else ()
    same = i1 == i2
    v = _SHARED[i1, i2]
    L1, L2 = sides[rows, i1], sides[rows, i2]
    s1 = np.where(_ENDS[i1, 0] == v, t1, L1 - t1)
    s2 = np.where(_ENDS[i2, 0] == v, t2, L2 - t2)
    gamma = angles[rows, np.where(same, 0, v)]
    half = np.sin(0.5 * gamma) ** 2
    if kappa.flat:
        d = np.sqrt((s1 - s2) ** 2 + 4.0 * s1 * s2 * half)
    else:
        k = kappa.scale
        d = mk.law_side(s1 * k, s2 * k, gamma) / k
    return np.where(same, np.abs(t1 - t2), d)


@dataclass(frozen=True)
class ComparisonPoint:
    side: str
    arc: float


@dataclass
class ComparisonTriangle:
    kappa: Kappa
    spec: TriangleSpec
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    angles: dict = field(default_factory=dict)

    def vertex(self, name: str) -> np.ndarray:
        return getattr(self, name)

    def dist(self, p, q) -> float:
        if self.kappa.flat:
            return float(np.linalg.norm(np.asarray(p) - np.asarray(q)))
        return float(mk.hdist(p, q)) / self.kappa.scale

    def separation(self, cp: ComparisonPoint, cq: ComparisonPoint) -> float:
        """Model distance between two comparison points, without realizing them."""
        sides = np.array([[self.spec.xy, self.spec.xz, self.spec.yz]])
        angles = np.array([[self.angles[v] for v in VERTICES]])
        for c in (cp, cq):
            if c.side not in SIDES:
                raise GeometryError(f"unknown side {c.side!r}")
            if c.arc < -mk.TOL_GEO or c.arc > self.spec.side(c.side[0], c.side[1]) + mk.TOL_GEO:
                raise GeometryError(f"arc {c.arc} outside side {c.side}")
        d = _separation(self.kappa, sides, angles, [SIDES.index(cp.side)], [cp.arc],
                        [SIDES.index(cq.side)], [cq.arc])
        return float(d[0])

    def point(self, cp: ComparisonPoint) -> np.ndarray:
        """Realize a comparison point: ``arc`` measured from the first vertex of ``side``."""
        p, q = cp.side[0], cp.side[1]
        length = self.spec.side(p, q)
        if cp.arc < -mk.TOL_GEO or cp.arc > length + mk.TOL_GEO:
            raise GeometryError(f"arc {cp.arc} outside side {cp.side} of length {length}")
        arc = min(max(cp.arc, 0.0), length)
        a, b = self.vertex(p), self.vertex(q)
        if self.kappa.flat:
            return a + (b - a) * (arc / length)
        return mk.geodesic_point(a, b, arc * self.kappa.scale)


def place_comparison(kappa, spec: TriangleSpec) -> ComparisonTriangle:
    """Realize the comparison triangle in canonical pose.

    ``x`` sits at the origin (base point for kappa < 0), ``y`` on the first
    axis and ``z`` in the upper half plane.
    """
    kappa = as_kappa(kappa)
    ax = model_angle(kappa, spec, "x")
    if kappa.flat:
        x = np.zeros(2)
        y = np.array([spec.xy, 0.0])
        z = spec.xz * np.array([math.cos(ax), math.sin(ax)])
    else:
        k = kappa.scale
        x = mk.base_point(2)
        y = mk.exp_map(x, np.array([spec.xy * k, 0.0, 0.0]))
        z = mk.exp_map(x, spec.xz * k * np.array([math.cos(ax), math.sin(ax), 0.0]))
    angles = {v: model_angle(kappa, spec, v) for v in VERTICES}
    return ComparisonTriangle(kappa, spec, x, y, z, angles)


def mk_dist(kappa, x, y):
    """Distance in M^2_kappa between two sheet points (kappa < 0 only)."""
    kappa = as_kappa(kappa)
    if kappa.flat:
        raise GeometryError("kappa = 0 is the Euclidean plane; use planar distance")
    return mk.hdist(x, y) / kappa.scale


@dataclass
class CatReport:
    triangle_id: int
    samples: int
    max_violation: float
    tol: float = TOL_CAT

    @property
    def ok(self) -> bool:
        return self.max_violation <= self.tol

    def row(self):
        return [self.triangle_id, self.samples, f"{self.max_violation:.17g}",
                "pass" if self.ok else "fail"]


CAT_COLUMNS = ["triangle_id", "samples", "max_violation", "verdict"]


def write_cat_csv(path, reports):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CAT_COLUMNS)
        for r in reports:
            w.writerow(r.row())


def _edge_positions(samples, rng):
    # stratified uniform fractions plus both endpoints
    m = max(samples, 2)
    strata = (np.arange(m - 2) + rng.random(m - 2)) / max(m - 2, 1)
    return np.concatenate([[0.0, 1.0], strata])[:samples] if samples >= 2 else np.array([0.0])


def cat_check(kappa, space, x, y, z, samples: int = 64, rng=None, tol: float = TOL_CAT,
              triangle_id: int = 0) -> CatReport:
    """Sample pairs of points on the edges of ``(x, y, z)`` and audit
    ``rho(a, b) <= d(a_bar, b_bar)`` against the comparison triangle in M^2_kappa.

    ``space`` supplies the distance and geodesic oracles (see :mod:`catfix.spaces`).
    """
    rng = np.random.default_rng(rng)
    kappa = as_kappa(kappa)
    verts = {"x": x, "y": y, "z": z}
    spec = TriangleSpec(space.dist(x, y), space.dist(x, z), space.dist(y, z))
    tri = place_comparison(kappa, spec)
    fr = _edge_positions(samples, rng)
    worst = -np.inf
    for i in range(samples):
        s1, s2 = SIDES[rng.integers(3)], SIDES[rng.integers(3)]
        f1, f2 = fr[i], fr[rng.integers(len(fr))]
        pts, bars = [], []
        for side, f in ((s1, f1), (s2, f2)):
            p, q = verts[side[0]], verts[side[1]]
            arc = f * spec.side(side[0], side[1])
            pts.append(space.geodesic_point(p, q, arc))
            bars.append(ComparisonPoint(side, arc))
        worst = max(worst, space.dist(pts[0], pts[1]) - tri.separation(*bars))
    return CatReport(triangle_id, samples, float(worst), tol)


def cat_check_batch(kappa, x, y, z, samples: int = 8, rng=None, tol: float = TOL_CAT):
    """Vectorized :func:`cat_check` for stacks of H^n triangles (shape ``(m, n + 1)``).

    Returns the per-triangle maximum violation as an array.
    """
    rng = np.random.default_rng(rng)
    kappa = as_kappa(kappa)
    x, y, z = (np.asarray(v, dtype=float) for v in (x, y, z))
    sides = np.stack([mk.hdist(x, y), mk.hdist(x, z), mk.hdist(y, z)], axis=-1)
    m = sides.shape[0]
    angles = _vertex_angles(kappa, sides)
    ends = ((x, y), (x, z), (y, z))
    worst = np.full(m, -np.inf)
    for _ in range(samples):
        picks = rng.integers(3, size=(2, m))
        fr = rng.random((2, m))
        snap = rng.random(m) < 0.1
        fr[:, snap] = np.round(fr[:, snap])
        arcs = fr * sides[np.arange(m), picks]
        pts = []
        for j in range(2):
            p = np.empty_like(x)
            for idx, (a, b) in enumerate(ends):
                sel = picks[j] == idx
                if np.any(sel):
                    p[sel] = mk.geodesic_point(a[sel], b[sel], arcs[j, sel])
            pts.append(p)
        rho = mk.hdist(pts[0], pts[1])
        dbar = _separation(kappa, sides, angles, picks[0], arcs[0], picks[1], arcs[1])
        worst = np.maximum(worst, rho - dbar)
    return worst


def _planar_angles(b, c, a):
    cos = (b * b + c * c - a * a) / (2.0 * b * c)
    return np.arccos(np.clip(cos, -1.0, 1.0))


@dataclass
class AngleReport:
    space_angle: float
    model_angle: float
    tol: float = TOL_CAT

    @property
    def ok(self) -> bool:
        return self.space_angle <= self.model_angle + self.tol


def angle_comparison_check(space, x, y, z, kappa, tol: float = TOL_CAT) -> AngleReport:
    """Alexandrov angle at ``x`` in the space versus the angle at ``x_bar`` in M^2_kappa."""
    spec = TriangleSpec(space.dist(x, y), space.dist(x, z), space.dist(y, z))
    return AngleReport(float(space.angle(x, y, z)), model_angle(kappa, spec, "x"), tol)
