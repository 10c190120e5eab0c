"""Hyperboloid model of H^n.

Points are plain float arrays of length ``n + 1`` living on the upper sheet
``<x, x> = -1, x[-1] >= 1`` of the Minkowski form.  Every function broadcasts
over leading axes, so a stack of points has shape ``(..., n + 1)``.

Distances use ``arccosh(-<x, y>)``; the form is negative on the sheet, so the
sign flip is what makes ``d(x, x) = 0``.

Precision note: sheet coordinates grow like ``exp(d(o, x))`` and the form
cancels, so results degrade roughly like ``1e-16 * exp(2 d(o, x))``.  Keep
working sets within a few units of the base point when 1e-9 accuracy matters.
"""
from __future__ import annotations

from typing import NamedTuple

import math

import numpy as np

from .errors import GeometryError

TOL_MODEL = 1e-10
TOL_GEO = 1e-9
CLAMP_TOL = 1e-7


def as_vec(coords) -> np.ndarray:
    """Validate ambient coordinates: float array, finite, at least 2 entries."""
    v = np.asarray(coords, dtype=float)
    if v.ndim == 0 or v.shape[-1] < 2:
        raise GeometryError(f"need at least 2 ambient coordinates, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise GeometryError("coordinates must be finite")
    return v


def mink_form(u, v) -> np.ndarray | float:
    """Minkowski form: sum of the first n coordinate products minus the last product."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.ndim == 1 and v.ndim == 1 and u.shape == v.shape:
        return float(u[:-1] @ v[:-1] - u[-1] * v[-1])
    if u.shape[-1] != v.shape[-1]:
        raise GeometryError(f"dimension mismatch: {u.shape[-1]} vs {v.shape[-1]}")
    out = np.einsum("...i,...i->...", u[..., :-1], v[..., :-1]) - u[..., -1] * v[..., -1]
    return out[()] if isinstance(out, np.ndarray) and out.ndim == 0 else out


def _sheet_drift(p):
    # |<p,p> + 1| relative to the coordinate scale; absolute error of the form
    # grows with |p|^2, so an absolute test would reject valid far points.
    return np.abs(mink_form(p, p) + 1.0) / (1.0 + np.sum(p * p, axis=-1))


def hpoint(coords, tol: float = TOL_MODEL) -> np.ndarray:
    """Validate and return a point (or stack of points) on the upper sheet."""
    p = as_vec(coords)
    if np.any(_sheet_drift(p) > tol):
        raise GeometryError(f"point off the hyperboloid: <x,x> = {mink_form(p, p)}")
    if np.any(p[..., -1] < 1.0 - tol):
        raise GeometryError("point on the lower sheet (last coordinate < 1)")
    return p


def is_hpoint(coords, tol: float = TOL_MODEL) -> bool:
    try:
        hpoint(coords, tol)
    except GeometryError:
        return False
    return True


def reproject(p, tol: float = TOL_MODEL) -> np.ndarray:
    """Rescale onto the sheet; drift larger than ``tol`` raises instead of being fixed."""
    p = np.asarray(p, dtype=float)
    if p.ndim == 1:
        sp = float(p[:-1] @ p[:-1])
        if abs(sp - p[-1] * p[-1] + 1.0) > tol * (1.0 + sp + p[-1] * p[-1]):
            raise GeometryError(f"drift off the hyperboloid exceeds {tol:g}")
        out = p.copy()
        out[-1] = math.sqrt(1.0 + sp)
        return out
    if np.any(_sheet_drift(p) > tol):
        raise GeometryError(f"drift off the hyperboloid exceeds {tol:g}")
    # recompute the time coordinate; stable even where <p, p> cancels badly
    out = p.copy()
    out[..., -1] = np.sqrt(1.0 + np.sum(p[..., :-1] ** 2, axis=-1))
    return out


def base_point(n: int = 2) -> np.ndarray:
    if n < 1:
        raise GeometryError("dimension must be >= 1")
    o = np.zeros(n + 1)
    o[-1] = 1.0
    return o


def lift(chart) -> np.ndarray:
    """Map R^n onto the sheet by solving for the last coordinate."""
    c = np.asarray(chart, dtype=float)
    last = np.sqrt(1.0 + np.sum(c * c, axis=-1, keepdims=True))
    return np.concatenate([c, last], axis=-1)


def hdist(x, y, tol: float = TOL_MODEL):
    """Hyperbolic distance, stable for nearby points.

    Near the diagonal ``arccosh`` of ``-<x, y>`` loses half the digits, so for
    ``-<x, y> < 2`` the chord form ``2 asinh(sqrt(<x-y, x-y>) / 2)`` is used.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim == 1 and y.ndim == 1 and x.shape == y.shape:
        w = -float(x[:-1] @ y[:-1] - x[-1] * y[-1])
        if w < 1.0 - tol * (1.0 + abs(x[-1] * y[-1])):
            raise GeometryError(f"-<x,y> = {w} < 1: inputs are not on the sheet")
        if w >= 2.0:
            return math.acosh(w)
        d = x - y
        q = float(d[:-1] @ d[:-1] - d[-1] * d[-1])
        return 2.0 * math.asinh(0.5 * math.sqrt(max(q, 0.0)))
    w = -mink_form(x, y)
    scale = 1.0 + np.abs(x[..., -1] * y[..., -1])
    if np.any(w < 1.0 - tol * scale):
        raise GeometryError(f"-<x,y> = {np.min(w)} < 1: inputs are not on the sheet")
    diff = x - y
    q = np.maximum(mink_form(diff, diff), 0.0)
    near = 2.0 * np.arcsinh(0.5 * np.sqrt(q))
    far = np.arccosh(np.maximum(w, 1.0))
    out = np.where(w < 2.0, near, far)
    return out[()] if out.ndim == 0 else out


class HTangent(NamedTuple):
    base: np.ndarray
    dir: np.ndarray


def tangent(base, direction, tol: float = TOL_MODEL) -> HTangent:
    """Validate a tangent vector (Minkowski-orthogonal to its base point)."""
    b = hpoint(base, tol)
    v = as_vec(direction)
    scale = 1.0 + np.sqrt(np.sum(v * v, axis=-1)) * np.sqrt(np.sum(b * b, axis=-1))
    if np.any(np.abs(mink_form(b, v)) > tol * scale):
        raise GeometryError("direction is not tangent at base")
    if np.any(mink_form(v, v) < -tol * scale):
        raise GeometryError("tangent vector must be spacelike")
    return HTangent(b, v)


def tnorm(v):
    """Length of a tangent vector."""
    return np.sqrt(np.maximum(mink_form(v, v), 0.0))


def unit_toward(x, y):
    """Unit tangent at ``x`` pointing to ``y``; zero where ``x == y``.

    Uses ``(y - x) - (q / 2) x`` with ``q = <y - x, y - x>``, which equals
    ``y + <x, y> x`` on the sheet but avoids cancellation for close points.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    diff = y - x
    q = mink_form(diff, diff)
    if x.ndim == 1 and y.ndim == 1:
        u = diff - 0.5 * q * x
        n = math.sqrt(max(mink_form(u, u), 0.0))
        return u / n if n > 0 else np.zeros_like(u)
    u = diff - 0.5 * np.asarray(q)[..., None] * x
    n = tnorm(u)
    safe = np.where(n > 0, n, 1.0)
    return np.where((n > 0)[..., None], u / np.asarray(safe)[..., None], 0.0)


def exp_map(x, v) -> np.ndarray:
    """Follow the geodesic from ``x`` with initial velocity ``v`` for unit time."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    n = np.asarray(tnorm(v))
    safe = np.where(n > 0, n, 1.0)
    coef = np.where(n > 0, np.sinh(n) / safe, 1.0)
    p = np.cosh(n)[..., None] * x + coef[..., None] * v
    return reproject(p)


def log_map(x, y) -> np.ndarray:
    """Tangent vector at ``x`` whose exponential is ``y``."""
    return np.asarray(hdist(x, y))[..., None] * unit_toward(x, y)


RATIO_FORM_MIN = 0.5


def _ratio_weights(d, s):
    # sinh(d - s) / sinh d and sinh s / sinh d in overflow-free exponential form
    den = -np.expm1(-2.0 * d)
    wx = np.exp(-s) * -np.expm1(-2.0 * (d - s)) / den
    wy = np.exp(s - d) * -np.expm1(-2.0 * s) / den
    return wx, wy


def geodesic_point(x, y, s, tol: float = TOL_GEO) -> np.ndarray:
    """Point at arc length ``s`` from ``x`` on the segment ``[x, y]``.

    Long segments use ``(sinh(d - s) x + sinh(s) y) / sinh d``, whose weights
    are at most 1; the exponential-map form ``cosh(s) x + sinh(s) u`` cancels
    badly when the segment dips toward the base point between far endpoints.
    Short segments keep the exponential-map form.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim == 1 and y.ndim == 1 and np.ndim(s) == 0:
        d = hdist(x, y)
        s = float(s)
        if s < -tol or s > d + tol:
            raise GeometryError(f"arc {s} outside [0, {d}]")
        s = min(max(s, 0.0), d)
        if d >= RATIO_FORM_MIN:
            wx, wy = _ratio_weights(d, s)
            return reproject(wx * x + wy * y)
        return reproject(math.cosh(s) * x + math.sinh(s) * unit_toward(x, y))
    s = np.asarray(s, dtype=float)
    d = np.asarray(hdist(x, y))
    if np.any(s < -tol) or np.any(s > d + tol):
        raise GeometryError(f"arc {s} outside [0, {d}]")
    s = np.clip(s, 0.0, d)
    w = unit_toward(x, y)
    near = np.cosh(s)[..., None] * x + np.sinh(s)[..., None] * w
    dd = np.maximum(d, RATIO_FORM_MIN)
    wx, wy = _ratio_weights(dd, np.minimum(s, dd))
    far = wx[..., None] * x + wy[..., None] * y
    return reproject(np.where((d >= RATIO_FORM_MIN)[..., None], far, near))


def extend(x, y, s) -> np.ndarray:
    """Point at arc ``s >= 0`` from ``x`` along the geodesic through ``y`` (may pass ``y``)."""
    w = unit_toward(x, y)
    if np.any(tnorm(w) == 0):
        raise GeometryError("cannot extend a degenerate chord")
    s = np.asarray(s, dtype=float)
    return reproject(np.cosh(s)[..., None] * np.asarray(x) + np.sinh(s)[..., None] * w)


def law_angle(b, c, a):
    """Angle opposite side ``a`` in a hyperbolic triangle with adjacent sides ``b``, ``c``.

    Evaluated through the half-angle form of the cosine law,
    ``sinh^2(a/2) = sinh^2((b-c)/2) + sinh b sinh c sin^2(alpha/2)``, which stays
    accurate for angles near 0 and pi where ``arccos`` does not.
    """
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    a = np.asarray(a, dtype=float)
    if np.any(b < TOL_GEO) or np.any(c < TOL_GEO):
        raise GeometryError("degenerate vertex: adjacent side shorter than tol_geo")
    den = np.sinh(b) * np.sinh(c)
    s2 = (np.sinh(a / 2) ** 2 - np.sinh((b - c) / 2) ** 2) / den
    c2 = (np.sinh((b + c) / 2) ** 2 - np.sinh(a / 2) ** 2) / den
    if np.any(s2 < -CLAMP_TOL) or np.any(c2 < -CLAMP_TOL):
        raise GeometryError("side lengths violate the triangle inequality")
    out = 2.0 * np.arctan2(np.sqrt(np.maximum(s2, 0.0)), np.sqrt(np.maximum(c2, 0.0)))
    return out[()] if out.ndim == 0 else out


def law_side(b, c, alpha):
    """Side opposite ``alpha`` given adjacent sides (inverse of :func:`law_angle`)."""
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    sh2 = np.sinh((b - c) / 2) ** 2 + np.sinh(b) * np.sinh(c) * np.sin(alpha / 2) ** 2
    out = 2.0 * np.arcsinh(np.sqrt(sh2))
    return out[()] if out.ndim == 0 else out


def alexandrov_angle(x, y, z):
    """Angle at ``x`` between the geodesics toward ``y`` and ``z``, in [0, pi].

    Measured between unit tangents; equals :func:`law_angle` applied to the
    three side lengths.
    """
    x = np.asarray(x, dtype=float)
    b = np.asarray(hdist(x, y))
    c = np.asarray(hdist(x, z))
    if np.any(b < TOL_GEO) or np.any(c < TOL_GEO):
        raise GeometryError("degenerate vertex: y or z coincides with x")
    u = unit_toward(x, y)
    v = unit_toward(x, z)
    out = 2.0 * np.arctan2(tnorm(u - v), tnorm(u + v))
    return out[()] if np.ndim(out) == 0 else out


# -- isometries ---------------------------------------------------------------

def _signature(n):
    j = np.eye(n + 1)
    j[-1, -1] = -1.0
    return j


def inverse_isometry(m) -> np.ndarray:
    """Inverse of a Lorentz matrix: ``J M^T J``."""
    j = _signature(m.shape[0] - 1)
    return j @ m.T @ j


def boost_to(p) -> np.ndarray:
    """Lorentz matrix carrying the base point to ``p`` (pure boost, no rotation)."""
    p = hpoint(p)
    n = p.shape[0] - 1
    s = p[:-1]
    m = np.empty((n + 1, n + 1))
    m[:-1, :-1] = np.eye(n) + np.outer(s, s) / (1.0 + p[-1])
    m[:-1, -1] = s
    m[-1, :-1] = s
    m[-1, -1] = p[-1]
    return m


def apply(m, x) -> np.ndarray:
    """Apply a Lorentz matrix to a point or stack of points."""
    return reproject(np.asarray(x, dtype=float) @ np.asarray(m).T)


def rotation_about(p, angle: float, plane: tuple[int, int] = (0, 1)) -> np.ndarray:
    """Elliptic isometry fixing ``p``: rotation by ``angle`` in a tangent plane."""
    p = hpoint(p)
    n = p.shape[0] - 1
    i, k = plane
    if n < 2 or not (0 <= i < n and 0 <= k < n and i != k):
        raise GeometryError("rotation needs dimension >= 2 and a valid tangent plane")
    r = np.eye(n + 1)
    ca, sa = np.cos(angle), np.sin(angle)
    r[i, i], r[i, k], r[k, i], r[k, k] = ca, -sa, sa, ca
    b = boost_to(p)
    return b @ r @ inverse_isometry(b)


def translation_along(x, y, shift: float) -> np.ndarray:
    """Hyperbolic isometry sliding the geodesic line through ``x`` and ``y`` by ``shift``."""
    x = hpoint(x)
    n = x.shape[0] - 1
    b = boost_to(x)
    binv = inverse_isometry(b)
    o = base_point(n)
    u = apply(binv, hpoint(y))
    w = unit_toward(o, u)
    if tnorm(w) == 0:
        raise GeometryError("translation axis is degenerate (x == y)")
    lm = np.empty((n + 1, n + 1))
    ch, sh = np.cosh(shift), np.sinh(shift)
    for col in range(n + 1):
        e = np.zeros(n + 1)
        e[col] = 1.0
        alpha = -mink_form(e, o)
        beta = mink_form(e, w)
        perp = e - alpha * o - beta * w
        lm[:, col] = perp + alpha * (ch * o + sh * w) + beta * (sh * o + ch * w)
    return b @ lm @ binv


def tangent_frame(p) -> np.ndarray:
    """Orthonormal tangent basis at ``p`` as the rows of an ``(n, n + 1)`` array."""
    b = boost_to(p)
    return b[:, :-1].T
