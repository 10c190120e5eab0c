"""Weighted simplicial R-trees.

A :class:`MetricTree` is a finite tree with positive edge lengths.  Points
are ``(edge, offset)`` pairs with the offset measured from the edge's first
endpoint; offsets that land on an endpoint are canonicalized to node form so
equal points compare equal.

Infinite trees are only reachable through bounded-depth generators, see
:func:`tree_ray_detect`.
"""
from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable

import numpy as np

from .errors import GeometryError, TreeFormatError

SNAP = 1e-12
_tokens = itertools.count()


@dataclass(frozen=True)
class Edge:
    u: Hashable
    v: Hashable
    length: float


@dataclass(frozen=True)
class TreePoint:
    tree: int
    edge: int | None = None
    offset: float = 0.0
    node: Hashable | None = None

    @property
    def is_node(self) -> bool:
        return self.node is not None


class MetricTree:
    """Finite metric tree; immutable after construction."""

    def __init__(self, edges: Iterable, nodes: Iterable = ()):
        self.edges: tuple[Edge, ...] = tuple(
            e if isinstance(e, Edge) else Edge(e[0], e[1], float(e[2])) for e in edges)
        names = list(dict.fromkeys(list(nodes) + [n for e in self.edges for n in (e.u, e.v)]))
        if not names:
            raise GeometryError("a tree needs at least one node")
        self.nodes: tuple = tuple(names)
        self.token = next(_tokens)
        self._adj: dict = {n: [] for n in self.nodes}
        self._edge_of: dict = {}
        for i, e in enumerate(self.edges):
            if not (math.isfinite(e.length) and e.length > 0):
                raise GeometryError(f"edge {i} ({e.u}-{e.v}) must have positive length")
            if e.u == e.v:
                raise GeometryError(f"edge {i} is a self-loop at {e.u!r}")
            key = frozenset((e.u, e.v))
            if key in self._edge_of:
                raise GeometryError(f"duplicate edge {e.u}-{e.v}")
            self._edge_of[key] = i
            self._adj[e.u].append((e.v, i))
            self._adj[e.v].append((e.u, i))
        if len(self.edges) != len(self.nodes) - 1:
            raise GeometryError("edge count must equal node count - 1 (graph has a cycle)")
        self.root = self.nodes[0]
        self._parent = {self.root: None}
        self._depth = {self.root: 0.0}
        self._level = {self.root: 0}
        queue = deque([self.root])
        while queue:
            a = queue.popleft()
            for b, i in self._adj[a]:
                if b not in self._parent:
                    self._parent[b] = a
                    self._depth[b] = self._depth[a] + self.edges[i].length
                    self._level[b] = self._level[a] + 1
                    queue.append(b)
        if len(self._parent) != len(self.nodes):
            raise GeometryError("tree is not connected")

    # -- nodes --------------------------------------------------------------
    def neighbors(self, node):
        return [b for b, _ in self._adj[node]]

    def edge_between(self, a, b) -> int:
        return self._edge_of[frozenset((a, b))]

    def _lca(self, a, b):
        while self._level[a] > self._level[b]:
            a = self._parent[a]
        while self._level[b] > self._level[a]:
            b = self._parent[b]
        while a != b:
            a, b = self._parent[a], self._parent[b]
        return a

    def node_dist(self, a, b) -> float:
        c = self._lca(a, b)
        return self._depth[a] + self._depth[b] - 2.0 * self._depth[c]

    def node_path(self, a, b) -> list:
        c = self._lca(a, b)
        up, down = [a], [b]
        while up[-1] != c:
            up.append(self._parent[up[-1]])
        while down[-1] != c:
            down.append(self._parent[down[-1]])
        return up + down[-2::-1]

    @property
    def total_length(self) -> float:
        return sum(e.length for e in self.edges)

    # -- points -------------------------------------------------------------
    def point(self, edge: int | None = None, offset: float = 0.0, node=None) -> TreePoint:
        """Build a canonical point: either ``node=`` or ``edge=`` with an offset."""
        if node is not None:
            if node not in self._adj:
                raise GeometryError(f"unknown node {node!r}")
            return TreePoint(self.token, node=node)
        if edge is None or not (0 <= edge < len(self.edges)):
            raise GeometryError(f"unknown edge {edge!r}")
        e = self.edges[edge]
        if offset < -SNAP or offset > e.length + SNAP:
            raise GeometryError(f"offset {offset} outside [0, {e.length}] on edge {edge}")
        if offset <= SNAP:
            return TreePoint(self.token, node=e.u)
        if offset >= e.length - SNAP:
            return TreePoint(self.token, node=e.v)
        return TreePoint(self.token, edge=edge, offset=float(offset))

    def node_point(self, node) -> TreePoint:
        return self.point(node=node)

    def random_point(self, rng) -> TreePoint:
        if not self.edges:
            return self.point(node=self.root)
        lengths = np.array([e.length for e in self.edges])
        i = int(rng.choice(len(lengths), p=lengths / lengths.sum()))
        return self.point(i, float(rng.random() * lengths[i]))

    def check(self, p: TreePoint):
        if not isinstance(p, TreePoint) or p.tree != self.token:
            raise GeometryError("point belongs to a different tree")

    def exits(self, p: TreePoint):
        """Nodes through which a path can leave ``p``, with the distance to each."""
        if p.is_node:
            return [(p.node, 0.0)]
        e = self.edges[p.edge]
        return [(e.u, p.offset), (e.v, e.length - p.offset)]

    def coords(self, p: TreePoint):
        """Readable location: ``('node', name)`` or ``('edge', id, offset)``."""
        return ("node", p.node) if p.is_node else ("edge", p.edge, p.offset)


def _check_pair(t, p, q):
    t.check(p)
    t.check(q)


def _route(t, p, q):
    """Best (exit of p, entry of q, total length) for points on different edges."""
    best = None
    for a, da in t.exits(p):
        for b, db in t.exits(q):
            total = da + t.node_dist(a, b) + db
            if best is None or total < best[2]:
                best = (a, b, total)
    return best


def tree_dist(t: MetricTree, p: TreePoint, q: TreePoint) -> float:
    """Length of the unique path between two points."""
    _check_pair(t, p, q)
    if p == q:
        return 0.0
    if not p.is_node and not q.is_node and p.edge == q.edge:
        return abs(p.offset - q.offset)
    return _route(t, p, q)[2]


def _walk(t, start_node, nodes, r):
    """Point at distance ``r`` along the node path ``nodes`` (starting at its first node)."""
    for a, b in zip(nodes, nodes[1:]):
        i = t.edge_between(a, b)
        e = t.edges[i]
        if r <= e.length:
            return t.point(i, r if e.u == a else e.length - r)
        r -= e.length
    return t.point(node=nodes[-1])


def _leg_point(t, p, exit_node, r):
    """Point at distance ``r`` from ``p`` toward one of its edge endpoints."""
    if p.is_node:
        return p
    e = t.edges[p.edge]
    off = p.offset - r if exit_node == e.u else p.offset + r
    return t.point(p.edge, off)


def tree_segment(t: MetricTree, p: TreePoint, q: TreePoint, s: float) -> TreePoint:
    """Point at arc ``s`` from ``p`` on the unique segment ``[p, q]``."""
    d = tree_dist(t, p, q)
    if s < -SNAP or s > d + SNAP * max(1.0, d):
        raise GeometryError(f"arc {s} outside [0, {d}]")
    s = min(max(s, 0.0), d)
    if s == 0.0:
        return p
    if s == d:
        return q
    if not p.is_node and not q.is_node and p.edge == q.edge:
        step = s if q.offset > p.offset else -s
        return t.point(p.edge, p.offset + step)
    a, b, _ = _route(t, p, q)
    da = dict(t.exits(p))[a]
    if s <= da:
        return _leg_point(t, p, a, s)
    path = t.node_path(a, b)
    mid = t.node_dist(a, b)
    if s <= da + mid:
        return _walk(t, a, path, s - da)
    db = dict(t.exits(q))[b]
    return _leg_point(t, q, b, d - s) if db > 0 else q


def path_intervals(t: MetricTree, p: TreePoint, q: TreePoint) -> dict:
    """Edge coverage of ``[p, q]`` as ``{edge: (lo, hi)}`` in offset coordinates."""
    _check_pair(t, p, q)
    out = {}
    if p == q:
        return out
    if not p.is_node and not q.is_node and p.edge == q.edge:
        out[p.edge] = (min(p.offset, q.offset), max(p.offset, q.offset))
        return out
    a, b, _ = _route(t, p, q)
    for pt, node in ((p, a), (q, b)):
        if not pt.is_node:
            e = t.edges[pt.edge]
            out[pt.edge] = (0.0, pt.offset) if node == e.u else (pt.offset, e.length)
    path = t.node_path(a, b)
    for x, y in zip(path, path[1:]):
        i = t.edge_between(x, y)
        out[i] = (0.0, t.edges[i].length)
    return out


def _overlap(i1, i2) -> float:
    total = 0.0
    for e, (lo, hi) in i1.items():
        if e in i2:
            total += max(0.0, min(hi, i2[e][1]) - max(lo, i2[e][0]))
    return total


def gluing_check(t: MetricTree, x: TreePoint, y: TreePoint, z: TreePoint,
                 tol: float = 1e-12) -> bool:
    """Segment gluing axiom at ``x``: if ``[y,x]`` and ``[x,z]`` meet only at ``x``,
    their union must be ``[y,z]``.  Checked by interval bookkeeping on edges.
    """
    yx = path_intervals(t, y, x)
    xz = path_intervals(t, x, z)
    if _overlap(yx, xz) > tol:
        return True
    union = dict(yx)
    for e, (lo, hi) in xz.items():
        if e in union:
            a, b = union[e]
            if max(lo, a) > min(hi, b) + tol:
                return False
            union[e] = (min(lo, a), max(hi, b))
        else:
            union[e] = (lo, hi)
    yz = path_intervals(t, y, z)
    if set(union) != set(yz):
        return False
    return all(abs(union[e][0] - yz[e][0]) <= tol and abs(union[e][1] - yz[e][1]) <= tol
               for e in yz)


def four_point_gap(t: MetricTree, p, q, r, s) -> float:
    """Difference between the two largest pairwise sums (0 in a 0-hyperbolic space)."""
    d = lambda a, b: tree_dist(t, a, b)  # noqa: E731
    sums = sorted([d(p, q) + d(r, s), d(p, r) + d(q, s), d(p, s) + d(q, r)])
    return sums[2] - sums[1]


def tree_extend(t: MetricTree, p: TreePoint, q: TreePoint, s: float) -> TreePoint | None:
    """Point at arc ``s >= d(p, q)`` on some geodesic from ``p`` through ``q``.

    Branches are taken in node-insertion order; returns ``None`` when every
    continuation dies at a leaf before reaching length ``s``.
    """
    d = tree_dist(t, p, q)
    if s <= d:
        return tree_segment(t, p, q, s)
    if p == q:
        raise GeometryError("cannot extend a degenerate chord")
    rest = s - d
    same_edge = not p.is_node and not q.is_node and p.edge == q.edge
    if not q.is_node:
        e = t.edges[q.edge]
        if same_edge:
            forward = q.offset > p.offset
        else:
            forward = _route(t, p, q)[1] == e.u
        left = e.length - q.offset if forward else q.offset
        if rest <= left:
            return t.point(q.edge, q.offset + rest if forward else q.offset - rest)
        return _descend(t, e.v if forward else e.u, e.u if forward else e.v, rest - left)
    a, b, _ = _route(t, p, q)
    path = t.node_path(a, b)
    if len(path) >= 2:
        came = path[-2]
    else:
        e = t.edges[p.edge]
        came = e.u if e.v == q.node else e.v
    return _descend(t, q.node, came, rest)


def _descend(t, node, came, rest):
    for nxt in t.neighbors(node):
        if nxt == came:
            continue
        i = t.edge_between(node, nxt)
        e = t.edges[i]
        if rest <= e.length:
            return t.point(i, rest if e.u == node else e.length - rest)
        found = _descend(t, nxt, node, rest - e.length)
        if found is not None:
            return found
    return None


def alexandrov_angle_tree(t: MetricTree, x, y, z) -> float:
    """0 when the segments from ``x`` share an initial piece, pi otherwise."""
    if x == y or x == z:
        raise GeometryError("degenerate vertex")
    return 0.0 if _overlap(path_intervals(t, x, y), path_intervals(t, x, z)) > SNAP else math.pi


# -- tree description files ---------------------------------------------------

def parse_tree(text: str) -> MetricTree:
    """Parse the line-oriented tree format.

    ::

        # comment
        edge <u> <v> <length>
        node <name>            # only needed for a single-node tree

    Errors raise :class:`TreeFormatError` with the 1-based line number.
    """
    edges, nodes, seen = [], [], {}
    parent = {}

    def find(a):
        while parent.setdefault(a, a) != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        kind = parts[0]
        if kind == "node":
            if len(parts) != 2:
                raise TreeFormatError(f"line {lineno}: expected 'node <name>'")
            nodes.append(parts[1])
        elif kind == "edge":
            if len(parts) != 4:
                raise TreeFormatError(f"line {lineno}: expected 'edge <u> <v> <length>'")
            u, v, raw_len = parts[1:]
            try:
                length = float(raw_len)
            except ValueError:
                raise TreeFormatError(f"line {lineno}: length {raw_len!r} is not a number") from None
            if not (math.isfinite(length) and length > 0):
                raise TreeFormatError(f"line {lineno}: edge length must be positive, got {raw_len}")
            if u == v:
                raise TreeFormatError(f"line {lineno}: self-loop at {u!r}")
            key = frozenset((u, v))
            if key in seen:
                raise TreeFormatError(f"line {lineno}: duplicate edge {u}-{v} (first on line {seen[key]})")
            if find(u) == find(v):
                raise TreeFormatError(f"line {lineno}: edge {u}-{v} closes a cycle")
            parent[find(u)] = find(v)
            seen[key] = lineno
            edges.append((u, v, length))
        else:
            raise TreeFormatError(f"line {lineno}: unknown directive {kind!r}")
    if not edges and not nodes:
        raise TreeFormatError("line 0: empty tree description")
    all_nodes = list(dict.fromkeys(nodes + [n for e in edges for n in e[:2]]))
    roots = {find(n) for n in all_nodes}
    if len(roots) > 1:
        raise TreeFormatError(f"line {len(text.splitlines())}: tree is not connected "
                              f"({len(roots)} components)")
    return MetricTree(edges, nodes)


def load_tree(path) -> MetricTree:
    with open(path) as fh:
        return parse_tree(fh.read())


def automorphism(t: MetricTree, mapping: dict) -> Callable:
    """Isometry of ``t`` induced by a node permutation (unlisted nodes stay fixed).

    Every edge must map onto an edge of the same length; the returned
    function maps points, preserving offsets along edges.
    """
    sigma = {n: mapping.get(n, n) for n in t.nodes}
    if sorted(map(repr, sigma.values())) != sorted(map(repr, t.nodes)):
        raise GeometryError("node map is not a permutation of the tree's nodes")
    image = []
    for i, e in enumerate(t.edges):
        key = frozenset((sigma[e.u], sigma[e.v]))
        if key not in t._edge_of:
            raise GeometryError(f"edge {e.u}-{e.v} is not mapped onto an edge")
        j = t._edge_of[key]
        if abs(t.edges[j].length - e.length) > SNAP:
            raise GeometryError(f"edge {e.u}-{e.v} changes length under the map")
        image.append((j, t.edges[j].u == sigma[e.u]))

    def apply(p: TreePoint) -> TreePoint:
        t.check(p)
        if p.is_node:
            return t.point(node=sigma[p.node])
        j, same = image[p.edge]
        return t.point(j, p.offset if same else t.edges[j].length - p.offset)

    return apply


def star_tree(legs: Iterable[float], center: str = "c") -> MetricTree:
    """Star with one leg per length; leaves are named ``l0, l1, ...``."""
    return MetricTree([(center, f"l{i}", float(x)) for i, x in enumerate(legs)], [center])


# -- boundedness on procedural trees -----------------------------------------

@dataclass
class TreeGenerator:
    """Lazily expanded rooted tree.

    ``children(node)`` lists ``(child, edge_length)``; ``tail_bound(node)``,
    when given, bounds the length of every downward path from ``node``.
    """
    root: Hashable
    children: Callable
    tail_bound: Callable | None = None


def binary_generator(length: float = 1.0) -> TreeGenerator:
    return TreeGenerator((), lambda n: [(n + (0,), length), (n + (1,), length)])


def geometric_generator(ratio: float = 0.5, first: float = 1.0, arity: int = 2) -> TreeGenerator:
    """Edge at depth k has length ``first * ratio**k``; downward paths sum to
    at most ``first * ratio**k / (1 - ratio)``."""
    if not 0 < ratio < 1:
        raise GeometryError("ratio must lie in (0, 1)")

    def children(n):
        ln = first * ratio ** len(n)
        return [(n + (i,), ln) for i in range(arity)]

    return TreeGenerator((), children, lambda n: first * ratio ** len(n) / (1.0 - ratio))


@dataclass
class RayVerdict:
    status: str  # "bounded" | "ray" | "unknown"
    witness: list = field(default_factory=list)
    length: float = 0.0


def tree_ray_detect(t, length_budget: float, within: Callable | None = None,
                    depth_budget: int = 64, node_budget: int = 100_000) -> RayVerdict:
    """Three-valued geodesic-boundedness verdict.

    Finite :class:`MetricTree` inputs are always bounded.  For a
    :class:`TreeGenerator`, a root path of length ``>= length_budget`` inside
    ``within`` is returned as a ray witness; subtrees whose ``tail_bound``
    keeps every path short are pruned as bounded; hitting the depth or node
    budget anywhere else yields ``unknown``.
    """
    if isinstance(t, MetricTree):
        far = max((t.node_dist(t.root, n) for n in t.nodes), default=0.0)
        return RayVerdict("bounded", [], far)
    within = within or (lambda n: True)
    stack = [(t.root, 0.0, [t.root])]
    undecided = False
    visited = 0
    best = (0.0, [t.root])
    while stack:
        node, ln, path = stack.pop()
        visited += 1
        if ln > best[0]:
            best = (ln, path)
        if ln >= length_budget:
            return RayVerdict("ray", path, ln)
        if t.tail_bound is not None and ln + t.tail_bound(node) < length_budget:
            continue
        if len(path) > depth_budget or visited > node_budget:
            undecided = True
            continue
        kids = [(c, w) for c, w in t.children(node) if within(c)]
        for c, w in reversed(kids):
            stack.append((c, ln + w, path + [c]))
    if undecided:
        return RayVerdict("unknown", best[1], best[0])
    return RayVerdict("bounded", best[1], best[0])
