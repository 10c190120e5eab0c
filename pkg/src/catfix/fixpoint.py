"""Fixed points of nonexpansive maps on closed convex sets.

The engine follows the classical anchored-contraction route.  For an anchor
``theta`` and weight ``t`` in (0, 1) the map ``T_t x = combine(theta, T x, 1 - t)``
is a contraction with factor ``1 - t``; its fixed point ``z_t`` satisfies

    d(z_t, T z_t) = t / (1 - t) * d(theta, z_t).

Letting ``t_n -> 0`` either keeps ``z_n`` bounded (then the asymptotic center
of the tail is an approximate fixed point) or sends ``d(theta, z_n)`` to
infinity, in which case the chords ``[theta, z_n]`` point along a geodesic ray.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import AuditError, ConvergenceError, GeometryError
from .spaces import (AuditReport, ConvexSet, GeodesicSpace, Ray, TreeSpace, combine,
                     project_ray)


class NonexpansiveMap:
    """Evaluation oracle for a self-map of a convex set, plus a sampled audit."""

    def __init__(self, fn: Callable, space: GeodesicSpace, name: str = "T",
                 exact_lipschitz: float | None = None):
        self.fn = fn
        self.space = space
        self.name = name
        self.exact_lipschitz = exact_lipschitz

    def __call__(self, x):
        return self.fn(x)

    def audit(self, sampler: Callable, samples: int = 256, rng=None, rel: float = 1e-9,
              floor: float = 1e-12) -> AuditReport:
        """Record the worst ``d(Tx, Ty) - d(x, y)(1 + rel)`` over sampled pairs."""
        rng = np.random.default_rng(rng)
        worst, where = -math.inf, None
        for _ in range(samples):
            x, y = sampler(rng), sampler(rng)
            v = self.space.dist(self(x), self(y)) - self.space.dist(x, y) * (1.0 + rel)
            if v > worst:
                worst, where = v, (x, y)
        return AuditReport(f"nonexpansive:{self.name}", samples, float(worst), floor, where)

    def require_nonexpansive(self, sampler, samples=256, rng=None, rel=1e-9, floor=1e-12):
        rep = self.audit(sampler, samples, rng, rel, floor)
        if not rep.ok:
            raise AuditError(f"{self.name} failed the nonexpansiveness audit "
                             f"(excess {rep.max_violation:.3e})", rep.worst)
        return rep


@dataclass
class Contraction:
    fn: Callable
    k: float
    space: GeodesicSpace

    def __call__(self, x):
        return self.fn(x)


@dataclass(frozen=True)
class Schedule:
    """Weights ``t_n`` (n >= 1) decreasing to 0.

    ``harmonic``: ``1 / (1 + n / scale)`` (``scale = 1`` gives ``1 / (n + 1)``);
    ``power``: ``(1 + n / scale) ** -power``.
    """
    kind: str = "harmonic"
    scale: float = 1.0
    power: float = 1.0

    def __post_init__(self):
        if self.kind not in ("harmonic", "power"):
            raise GeometryError(f"unknown schedule kind {self.kind!r}")
        if not self.scale > 0 or not self.power > 0:
            raise GeometryError("schedule scale and power must be positive")

    def __call__(self, n: int) -> float:
        if n < 1:
            raise GeometryError("schedule index starts at 1")
        base = 1.0 + n / self.scale
        return 1.0 / base if self.kind == "harmonic" else base ** -self.power


def t_contraction(T, theta, t: float, space: GeodesicSpace | None = None) -> Contraction:
    """``x -> combine(theta, T x, 1 - t)``, Lipschitz with constant ``1 - t``."""
    if not 0.0 < t < 1.0:
        raise GeometryError(f"contraction weight {t} outside (0, 1)")
    space = space or T.space
    return Contraction(lambda x: combine(space, theta, T(x), 1.0 - t), 1.0 - t, space)


def picard(f: Contraction, x0, tol: float = 1e-10, budget: int = 1_000_000):
    """Iterate ``f`` from ``x0``; returns ``(point, iterations)``.

    Stops once ``d(x_{m+1}, x_m) <= tol (1 - k) / k``, which by the a-priori
    estimate puts the iterate within ``tol`` of the fixed point.  Successive
    steps are audited against the declared factor ``k`` along the way.
    """
    k = f.k
    if not (0.0 <= k < 1.0):
        raise AuditError(f"contraction factor {k} is not below 1")
    space = f.space
    stop = tol * (1.0 - k) / k if k > 0 else math.inf
    x = x0
    prev_step = None
    for m in range(1, budget + 1):
        y = f(x)
        step = space.dist(x, y)
        if prev_step is not None and step > k * prev_step * (1.0 + 1e-9) + tol:
            raise AuditError(f"step grew from {prev_step:.3e} to {step:.3e}; "
                             f"map is not a {k}-contraction")
        if step <= stop:
            return y, m
        prev_step = step
        x = y
    raise ConvergenceError("Picard iteration exhausted its budget",
                           {"budget": budget, "last_step": step, "threshold": stop, "k": k})


@dataclass
class FixpointRun:
    """Trajectory of the anchored approximation ``z_n``."""
    anchor: object
    t: list = field(default_factory=list)
    iterates: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    anchor_dists: list = field(default_factory=list)
    inner_iterations: list = field(default_factory=list)
    verdict: str = "budget exhausted"

    def __len__(self):
        return len(self.iterates)

    def identity_errors(self) -> np.ndarray:
        """``|r_n - t_n / (1 - t_n) d(theta, z_n)|`` along the run."""
        t = np.asarray(self.t)
        return np.abs(np.asarray(self.residuals) - t / (1.0 - t) * np.asarray(self.anchor_dists))


TRACE_COLUMNS = ["n", "t_n", "anchor_dist", "residual", "inner_iterations", "round"]


def trace_rows(runs):
    n = 0
    for r, run in enumerate(runs):
        for i in range(len(run)):
            n += 1
            yield [n, f"{run.t[i]:.17g}", f"{run.anchor_dists[i]:.17g}",
                   f"{run.residuals[i]:.17g}", run.inner_iterations[i], r]


def write_trace(path, runs):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        w.writerows(trace_rows(runs))


def approx_sequence(T: NonexpansiveMap, theta, schedule: Schedule = Schedule(),
                    inner_tol: float = 1e-10, N: int = 100, space=None,
                    inner_budget: int = 1_000_000, monitor: Callable | None = None) -> FixpointRun:
    """Compute ``z_n``, the fixed point of ``T_{t_n}``, for ``n = 1..N``.

    Each Picard solve is warm-started at ``z_{n-1}``.  ``monitor(run)`` is
    called after every step; a truthy return stops the sequence early.
    """
    space = space or T.space
    run = FixpointRun(theta)
    z = theta
    for n in range(1, N + 1):
        t = schedule(n)
        z, its = picard(t_contraction(T, theta, t, space), z, inner_tol, inner_budget)
        run.t.append(t)
        run.iterates.append(z)
        run.inner_iterations.append(its)
        run.residuals.append(space.dist(z, T(z)))
        run.anchor_dists.append(space.dist(theta, z))
        if monitor is not None and monitor(run):
            break
    return run


@dataclass
class AsymCenterResult:
    center: object
    radius: float
    window: int


def _dists(space, x, pts):
    many = getattr(space, "dists", None)
    if many is not None:
        return many(x, pts)
    return np.array([space.dist(x, p) for p in pts])


def asymptotic_center(space: GeodesicSpace, points, window: int | None = None,
                      tol: float = 1e-10, diameter_budget: float = 1e3) -> AsymCenterResult:
    """Minimize ``f_W(y) = max_i d(y, x_i)`` over the last ``window`` points.

    Trees: the minimizer is the midpoint of a diametral pair, computed exactly.
    Chart spaces (H^n, the plane): nested golden-section search, one
    coordinate at a time, in a chart where geodesics are straight lines.
    ``f_W`` is geodesically convex, so it is quasiconvex along chart lines and
    each one-dimensional search (including the partial minima feeding the
    outer levels) is unimodal.  The search box is the chart bounding box of
    the window, which contains the convex hull and hence the minimizer.
    """
    pts = list(points)
    if window is not None:
        pts = pts[-window:]
    if not pts:
        raise GeometryError("empty window")
    w = len(pts)
    diam, pair = 0.0, (0, 0)
    for i, j in combinations(range(w), 2):
        d = space.dist(pts[i], pts[j])
        if d > diam:
            diam, pair = d, (i, j)
    if diam > diameter_budget:
        raise GeometryError(f"window diameter {diam:.3g} exceeds budget {diameter_budget:g}")
    if diam == 0.0:
        return AsymCenterResult(pts[0], 0.0, w)
    if isinstance(space, TreeSpace):
        a, b = pts[pair[0]], pts[pair[1]]
        c = space.geodesic_point(a, b, 0.5 * diam)
        return AsymCenterResult(c, float(max(space.dist(c, p) for p in pts)), w)
    chart = space.chart(pts[-1])
    if chart is None:
        raise GeometryError(f"no search chart for space {space.tag!r}")
    to_chart, from_chart, dim = chart
    k = np.asarray(to_chart(np.asarray(pts)))
    lo, hi = k.min(axis=0), k.max(axis=0)
    width = float(np.max(hi - lo))

    def f(v):
        # box corners may leave the chart domain; the penalty grows with |v|
        # so f stays quasiconvex along every chart line
        try:
            return float(np.max(_dists(space, from_chart(v), pts)))
        except GeometryError:
            return 1e300 * (1.0 + float(np.dot(v, v)))

    def level(prefix):
        i = len(prefix)
        if i == dim:
            v = np.array(prefix)
            return f(v), v
        best = {}

        def g(u):
            val, arg = level(prefix + [u])
            best[u] = (val, arg)
            return val

        if hi[i] - lo[i] <= tol * width:
            return level(prefix + [float(lo[i])])
        opt = minimize_scalar(g, bounds=(lo[i], hi[i]), method="bounded",
                              options={"xatol": tol * width, "maxiter": 400})
        cands = [best.get(u) or level(prefix + [u]) for u in (opt.x, lo[i], hi[i])]
        return min(cands, key=lambda c: c[0])

    val, arg = level([])
    return AsymCenterResult(from_chart(arg), val, w)


def counterexample_map(space: GeodesicSpace, ray: Ray, K: ConvexSet | None = None,
                       probes=(0.0, 0.5, 1.0, 2.0, 4.0, 8.0)) -> NonexpansiveMap:
    """``T x = c(t + 1)`` where ``c(t)`` is the nearest point of the ray to ``x``.

    Nonexpansive (projection onto a convex set, then an isometric unit shift
    along the ray) and fixed-point free.
    """
    if not math.isinf(ray.length):
        raise GeometryError("counterexample needs an unbounded ray")
    if K is not None:
        for t in probes:
            if not K.contains(ray.at(t)):
                raise GeometryError(f"set does not contain the ray (fails at t = {t})")

    def fn(x):
        t, _ = project_ray(space, ray, x)
        return ray.at(t + 1.0)

    return NonexpansiveMap(fn, space, name="ray-shift", exact_lipschitz=1.0)


@dataclass
class SolverConfig:
    anchor: object = None
    schedule: Schedule = Schedule()
    inner_tol: float = 1e-10
    inner_budget: int = 1_000_000
    window: int = 32
    round_length: int | None = None
    divergence_threshold: float = 1e3
    accept_tol: float = 1e-8
    max_outer: int = 1000
    audit_samples: int = 256
    center_tol: float = 1e-10
    seed: int = 0


@dataclass
class RayWitness:
    """Chord data pointing along the escape direction.

    ``guide`` is the point at distance ``probe`` on ``[theta, z_N]``;
    ``spread`` is the largest distance between such points over the last
    window (small spread: the chords agree on an initial segment of length
    ``probe``).
    """
    origin: object
    guide: object
    probe: float
    length: float
    spread: float


@dataclass
class SolveResult:
    verdict: str  # "converged" | "divergent" | "unknown"
    point: object = None
    residual: float = math.nan
    witness: RayWitness | None = None
    runs: list = field(default_factory=list)
    outer_iterations: int = 0
    audit: AuditReport | None = None


def _growth_monitor(cfg: SolverConfig, state: dict):
    W = cfg.window
    length = cfg.round_length or 2 * W

    def monitor(run):
        d = run.anchor_dists
        if len(d) >= 2 * W:
            older = float(np.mean(d[-2 * W:-W]))
            newer = float(np.mean(d[-W:]))
            if newer >= max(2.0 * older, cfg.accept_tol):
                state["growth"] = True
            tail = np.diff(d[-W:])
            if state.get("growth") and d[-1] > cfg.divergence_threshold and np.all(tail >= 0):
                state["divergent"] = True
                return True
        if len(d) >= length and not state.get("growth"):
            return True
        return state["used"] + len(d) >= cfg.max_outer

    return monitor


def _witness(space, run, W):
    zs = run.iterates[-W:]
    theta = run.anchor
    probe = 0.5 * min(run.anchor_dists[-W:])
    guides = [space.geodesic_point(theta, z, probe) for z in zs]
    spread = max((space.dist(a, b) for a, b in combinations(guides, 2)), default=0.0)
    return RayWitness(theta, guides[-1], probe, run.anchor_dists[-1], spread)


def solve(space: GeodesicSpace, K: ConvexSet, T: NonexpansiveMap,
          config: SolverConfig | None = None) -> SolveResult:
    """Fixed point or escape certificate for a nonexpansive ``T: K -> K``.

    Runs the anchored sequence in rounds.  A round that settles (no window
    doubling) yields the asymptotic center of its last window; if that point
    moves less than ``accept_tol`` under ``T`` it is returned, otherwise it
    becomes the next anchor.  Anchor distances that double across consecutive
    windows, keep growing, and pass ``divergence_threshold`` produce the
    ``divergent`` verdict with a :class:`RayWitness`.
    """
    cfg = config or SolverConfig()
    rng = np.random.default_rng(cfg.seed)
    audit = T.require_nonexpansive(lambda r: K.sample(r), cfg.audit_samples, rng)
    theta = K.project(space.base_point()) if cfg.anchor is None else cfg.anchor
    result = SolveResult("unknown", audit=audit)
    best = (math.inf, None)
    used = 0
    while used < cfg.max_outer:
        state = {"used": used}
        run = approx_sequence(T, theta, cfg.schedule, cfg.inner_tol,
                              cfg.max_outer - used, space, cfg.inner_budget,
                              _growth_monitor(cfg, state))
        used += len(run)
        result.runs.append(run)
        if state.get("divergent"):
            run.verdict = "divergent"
            result.verdict = "divergent"
            result.witness = _witness(space, run, cfg.window)
            break
        if state.get("growth"):
            run.verdict = "budget exhausted"
            break
        ac = asymptotic_center(space, run.iterates, cfg.window, cfg.center_tol,
                               diameter_budget=2.0 * cfg.divergence_threshold)
        res = space.dist(ac.center, T(ac.center))
        if res < best[0]:
            best = (res, ac.center)
        if res <= cfg.accept_tol:
            run.verdict = "converged"
            result.verdict = "converged"
            break
        run.verdict = "re-anchored"
        theta = ac.center
    result.outer_iterations = used
    result.residual, result.point = best
    if result.verdict == "converged":
        assert result.residual <= cfg.accept_tol
    return result
