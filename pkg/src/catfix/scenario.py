"""Scenario files: YAML with a schema version, strict keys and line-numbered errors.

Example::

    schema_version: 1
    seed: 7
    space: {type: hyperbolic, dim: 2}
    set: {type: ball, center: [0, 0], radius: 2}
    map: {type: rotation, center: [0.3, 0.2], angle: 1.5707963267948966}
    solver: {accept_tol: 1.0e-8, max_outer: 1000}

Points in H^n (and the scaled model planes) are given by their first ``n``
hyperboloid coordinates; the last one is solved for.  Tree points are node
names or ``{edge: i, offset: s}`` mappings.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from . import minkowski as mk
from . import rtree
from .errors import ConfigError, GeometryError, TreeFormatError
from .fixpoint import NonexpansiveMap, Schedule, SolverConfig, counterexample_map
from .spaces import (Ball, EuclideanSpace, HyperbolicSpace, Intersection, Ray, Segment,
                     TreeSpace, Tube, WholeSpace, model_space)

SCHEMA_VERSION = 1

_SPACE_KEYS = {"hyperbolic": {"dim"}, "model": {"kappa", "dim"}, "plane": {"dim"},
               "tree": {"file", "edges"}}
_SET_KEYS = {"whole": set(), "ball": {"center", "radius"}, "segment": {"a", "b"},
             "ray": {"origin", "through"}, "ray_tube": {"origin", "through", "width"},
             "intersection": {"parts"}}
_MAP_KEYS = {"identity": {"project"}, "rotation": {"center", "angle", "project"},
             "translation": {"from", "to", "shift", "project"}, "ray_shift": set(),
             "branch_shift": {"permutation", "project"}}
_SOLVER_KEYS = {"schedule", "schedule_scale", "schedule_power", "inner_tol", "inner_budget",
                "window", "round_length", "divergence_threshold", "accept_tol", "max_outer",
                "audit_samples", "center_tol", "anchor"}
_TOP_KEYS = {"schema_version", "seed", "space", "set", "map", "solver"}


class Located:
    """YAML data with the source line of every mapping key and sequence item."""

    def __init__(self, text: str):
        try:
            root = yaml.compose(text)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            raise ConfigError(f"malformed YAML: {getattr(exc, 'problem', exc)}",
                              mark.line + 1 if mark else None) from None
        self.lines: dict = {}
        self.data = self._walk(root, ()) if root is not None else None

    def _walk(self, node, path):
        self.lines[path] = node.start_mark.line + 1
        if isinstance(node, yaml.MappingNode):
            out = {}
            for k, v in node.value:
                key = yaml.safe_load(yaml.serialize(k)) if not isinstance(k, yaml.ScalarNode) else k.value
                if key in out:
                    raise ConfigError(f"duplicate key {key!r}", k.start_mark.line + 1)
                self.lines[path + (key,)] = k.start_mark.line + 1
                out[key] = self._walk(v, path + (key,))
                self.lines[path + (key,)] = k.start_mark.line + 1
            return out
        if isinstance(node, yaml.SequenceNode):
            return [self._walk(v, path + (i,)) for i, v in enumerate(node.value)]
        return yaml.safe_load(yaml.serialize(node))

    def line(self, path) -> int | None:
        path = tuple(path)
        while path not in self.lines and path:
            path = path[:-1]
        return self.lines.get(path)

    def fail(self, msg, path=()):
        raise ConfigError(msg, self.line(path))


def _mapping(doc: Located, value, path, allowed: set, required=()) -> dict:
    if not isinstance(value, dict):
        doc.fail(f"{'/'.join(map(str, path)) or 'document'} must be a mapping", path)
    for k in value:
        if k not in allowed:
            doc.fail(f"unknown key {k!r} in {'/'.join(map(str, path)) or 'document'}", path + (k,))
    for k in required:
        if k not in value:
            doc.fail(f"missing required key {k!r}", path)
    return value


def _number(doc, value, path, positive=False, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        doc.fail(f"{path[-1]} must be a number", path)
    if integer and not float(value).is_integer():
        doc.fail(f"{path[-1]} must be an integer", path)
    if not math.isfinite(value) or (positive and value <= 0):
        doc.fail(f"{path[-1]} must be {'positive' if positive else 'finite'}", path)
    return int(value) if integer else float(value)


@dataclass
class Scenario:
    space: object
    K: object
    T: NonexpansiveMap
    config: SolverConfig
    seed: int


def _typed(doc, value, path, table):
    _mapping(doc, value, path, {"type"} | set().union(*table.values()), ("type",))
    kind = value["type"]
    if kind not in table:
        doc.fail(f"unknown {path[-1]} type {kind!r}; expected one of {sorted(table)}", path + ("type",))
    _mapping(doc, value, path, {"type"} | table[kind])
    return kind


def _space(doc, spec, base: Path):
    path = ("space",)
    kind = _typed(doc, spec, path, _SPACE_KEYS)
    if kind == "tree":
        if ("file" in spec) == ("edges" in spec):
            doc.fail("tree space needs exactly one of 'file' or 'edges'", path)
        try:
            if "file" in spec:
                return rtree_space(rtree.load_tree(base / spec["file"]))
            return rtree_space(rtree.parse_tree(spec["edges"]))
        except (OSError, GeometryError, TreeFormatError) as exc:
            doc.fail(f"tree: {exc}", path)
    dim = _number(doc, spec.get("dim", 2), path + ("dim",), positive=True, integer=True)
    if kind == "hyperbolic":
        return HyperbolicSpace(dim)
    if kind == "plane":
        return EuclideanSpace(dim)
    kappa = _number(doc, spec.get("kappa", -1.0), path + ("kappa",))
    if kappa > 0:
        doc.fail("kappa must be nonpositive", path + ("kappa",))
    return model_space(kappa, dim)


def rtree_space(tree):
    return TreeSpace(tree)


def _point(doc, space, value, path):
    if isinstance(space, TreeSpace):
        t = space.tree
        try:
            if isinstance(value, dict):
                _mapping(doc, value, path, {"node", "edge", "offset"})
                if "node" in value:
                    return t.point(node=value["node"])
                return t.point(int(_number(doc, value.get("edge"), path + ("edge",), integer=True)),
                               _number(doc, value.get("offset", 0.0), path + ("offset",)))
            return t.point(node=value)
        except GeometryError as exc:
            doc.fail(str(exc), path)
    if not isinstance(value, list) or len(value) != space.dim:
        doc.fail(f"point must be a list of {space.dim} numbers", path)
    c = [_number(doc, v, path + (i,)) for i, v in enumerate(value)]
    return space.point(c)


def _set(doc, space, spec, path=("set",)):
    kind = _typed(doc, spec, path, _SET_KEYS)
    pt = lambda key: _point(doc, space, spec.get(key), path + (key,))  # noqa: E731
    for key in _SET_KEYS[kind]:
        if key not in spec:
            doc.fail(f"set type {kind!r} needs {key!r}", path)
    try:
        if kind == "whole":
            return WholeSpace(space)
        if kind == "ball":
            return Ball(space, pt("center"), _number(doc, spec["radius"], path + ("radius",)))
        if kind == "segment":
            return Segment(space, pt("a"), pt("b"))
        if kind == "ray":
            return Ray(space, pt("origin"), pt("through"))
        if kind == "ray_tube":
            return Tube(Ray(space, pt("origin"), pt("through")),
                        _number(doc, spec["width"], path + ("width",)))
        parts = spec["parts"]
        if not isinstance(parts, list) or not parts:
            doc.fail("intersection needs a nonempty list of parts", path + ("parts",))
        return Intersection([_set(doc, space, p, path + ("parts", i)) for i, p in enumerate(parts)])
    except GeometryError as exc:
        doc.fail(str(exc), path)


def _map(doc, space, K, spec):
    path = ("map",)
    kind = _typed(doc, spec, path, _MAP_KEYS)
    hyper = isinstance(space, HyperbolicSpace)
    try:
        if kind == "ray_shift":
            ray = K.ray if isinstance(K, Tube) else K
            if not isinstance(ray, Ray):
                doc.fail("ray_shift needs a 'ray' or 'ray_tube' set", path)
            return counterexample_map(space, ray, K)
        if kind == "identity":
            fn = lambda x: x  # noqa: E731
        elif kind == "rotation":
            c = _point(doc, space, spec.get("center"), path + ("center",))
            ang = _number(doc, spec.get("angle"), path + ("angle",))
            if hyper and space.dim == 2:
                R = mk.rotation_about(c, ang)
                fn = lambda x: mk.apply(R, x)  # noqa: E731
            elif isinstance(space, EuclideanSpace) and space.dim == 2:
                rot = np.array([[math.cos(ang), -math.sin(ang)], [math.sin(ang), math.cos(ang)]])
                fn = lambda x: c + rot @ (np.asarray(x) - c)  # noqa: E731
            else:
                doc.fail("rotation needs a 2-dimensional hyperbolic, model or plane space", path)
        elif kind == "translation":
            a = _point(doc, space, spec.get("from"), path + ("from",))
            b = _point(doc, space, spec.get("to"), path + ("to",))
            shift = _number(doc, spec.get("shift"), path + ("shift",))
            if hyper:
                M = mk.translation_along(a, b, shift * getattr(space, "k", 1.0))
                fn = lambda x: mk.apply(M, x)  # noqa: E731
            elif isinstance(space, EuclideanSpace):
                v = (b - a) / np.linalg.norm(b - a) * shift
                fn = lambda x: np.asarray(x) + v  # noqa: E731
            else:
                doc.fail("translation needs a hyperbolic, model or plane space", path)
        else:
            if not isinstance(space, TreeSpace):
                doc.fail("branch_shift needs a tree space", path)
            perm = spec.get("permutation")
            if not isinstance(perm, dict):
                doc.fail("permutation must map node names to node names", path + ("permutation",))
            fn = rtree.automorphism(space.tree, perm)
    except GeometryError as exc:
        doc.fail(str(exc), path)
    if spec.get("project", True):
        inner = fn
        fn = lambda x: K.project(inner(x))  # noqa: E731
    return NonexpansiveMap(fn, space, name=kind)


def _solver(doc, space, spec, K):
    path = ("solver",)
    _mapping(doc, spec, path, _SOLVER_KEYS)
    kw = {}
    ints = {"inner_budget", "window", "round_length", "max_outer", "audit_samples"}
    for key in _SOLVER_KEYS - {"schedule", "schedule_scale", "schedule_power", "anchor"}:
        if key in spec:
            kw[key] = _number(doc, spec[key], path + (key,), positive=True, integer=key in ints)
    try:
        kw["schedule"] = Schedule(spec.get("schedule", "harmonic"),
                                  _number(doc, spec.get("schedule_scale", 1.0), path + ("schedule_scale",)),
                                  _number(doc, spec.get("schedule_power", 1.0), path + ("schedule_power",)))
    except GeometryError as exc:
        doc.fail(str(exc), path + ("schedule",))
    if "anchor" in spec:
        kw["anchor"] = _point(doc, space, spec["anchor"], path + ("anchor",))
        if not K.contains(kw["anchor"]):
            doc.fail("anchor must lie in the set", path + ("anchor",))
    return SolverConfig(**kw)


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario: {exc}") from None
    return parse_scenario(text, path.parent)


def parse_scenario(text: str, base: Path = Path(".")) -> Scenario:
    doc = Located(text)
    top = _mapping(doc, doc.data, (), _TOP_KEYS, ("schema_version", "space", "map"))
    if top["schema_version"] != SCHEMA_VERSION:
        doc.fail(f"unsupported schema_version {top['schema_version']!r} (expected {SCHEMA_VERSION})",
                 ("schema_version",))
    seed = _number(doc, top.get("seed", 0), ("seed",), integer=True)
    if seed < 0:
        doc.fail("seed must be nonnegative", ("seed",))
    space = _space(doc, top["space"], base)
    K = _set(doc, space, top.get("set", {"type": "whole"}))
    T = _map(doc, space, K, top["map"])
    config = _solver(doc, space, top.get("solver", {}), K)
    config.seed = seed
    return Scenario(space, K, T, config, seed)


def load_verify_config(path) -> dict:
    """Per-campaign overrides for ``verify``: ``{campaign: {samples, h_max, space}}``."""
    from .cli import CAMPAIGNS
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    doc = Located(text)
    top = _mapping(doc, doc.data, (), {"schema_version", "seed"} | set(CAMPAIGNS), ("schema_version",))
    if top["schema_version"] != SCHEMA_VERSION:
        doc.fail(f"unsupported schema_version {top['schema_version']!r}", ("schema_version",))
    out = {"seed": _number(doc, top.get("seed", 0), ("seed",), integer=True)}
    for name in CAMPAIGNS:
        if name in top:
            sec = _mapping(doc, top[name], (name,), {"samples", "h_max", "space"})
            if "samples" in sec:
                sec["samples"] = _number(doc, sec["samples"], (name, "samples"), positive=True, integer=True)
            if "h_max" in sec:
                sec["h_max"] = _number(doc, sec["h_max"], (name, "h_max"), positive=True)
            if "space" in sec and sec["space"] not in ("hyperbolic", "tree"):
                doc.fail("space must be 'hyperbolic' or 'tree'", (name, "space"))
            out[name] = sec
    return out
