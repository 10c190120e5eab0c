"""
Fixed points on metric trees
============================

Metric trees are CAT(kappa) for every kappa.  A tripod whose legs are cycled
by an isometry, restricted to a bounded subtree, has its centre as the only
fixed point; an unbounded branch would let a shift escape instead.
"""
import numpy as np

from catfix import lemma_lab as lab
from catfix import rtree
from catfix.fixpoint import NonexpansiveMap, SolverConfig, solve
from catfix.spaces import Ball, TreeSpace

# trees satisfy the four-point condition exactly
rng = np.random.default_rng(0)
t = rtree.parse_tree("edge c a 1\nedge c b 2\nedge b d 1.5\nedge b e 0.5\n")
gaps = [rtree.four_point_gap(t, *(t.random_point(rng) for _ in range(4))) for _ in range(2000)]
print(f"largest four-point gap: {max(gaps):.2e}")

# and pass the comparison test against the curvature -1 model plane
print(next(lab.cat_campaign("tree", 500, rng=1, tree=t).summary_lines()))

# cycle the legs of a tripod and restrict to the ball of radius 1 around the centre
tri = rtree.star_tree([2.0, 2.0, 2.0])
space = TreeSpace(tri)
rotate = rtree.automorphism(tri, {"l0": "l1", "l1": "l2", "l2": "l0"})
K = Ball(space, tri.point(node="c"), 1.0)
T = NonexpansiveMap(lambda p: K.project(rotate(p)), space, "branch shift")
res = solve(space, K, T, SolverConfig(anchor=tri.point(edge=0, offset=1.0)))
print(f"\nbranch shift: {res.verdict}, residual {res.residual:.1e}, at {space.fmt(res.point)}")
