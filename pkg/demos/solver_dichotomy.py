"""
Fixed point or escaping ray
===========================

The anchored solver either lands on a fixed point or certifies that the
iterates run off along a ray.  We run both bundled hyperbolic scenarios and
export the trajectory in the unit-disk chart for external plotting.
"""
from pathlib import Path

import numpy as np

from catfix.fixpoint import solve
from catfix.scenario import load_scenario

HERE = Path(__file__).resolve().parent
SCENARIOS = HERE.parent / "scenarios"

# a quarter-turn rotation on a radius-2 ball: the rotation centre is the fixed point
sc = load_scenario(SCENARIOS / "ball_rotation.yaml")
res = solve(sc.space, sc.K, sc.T, sc.config)
print(f"ball rotation: {res.verdict}, residual {res.residual:.2e}, "
      f"{res.outer_iterations} outer iterations over {len(res.runs)} rounds")
print("fixed point in the chart:", np.round(res.point[:2], 10))

# residual r_n and the anchor distance are tied by r_n = t_n / (1 - t_n) d(theta, z_n)
first = res.runs[0]
print("largest residual identity error:", float(np.max(first.identity_errors())))

# the same iterates in the Poincare disk, for a scatter plot elsewhere
Z = np.array(first.iterates)
disk = Z[:, :2] / (1.0 + Z[:, 2:])
print("first disk points:\n", np.round(disk[:5], 4))

# a shift along a thickened ray has no fixed point: anchor distances grow without bound
sc = load_scenario(SCENARIOS / "ray_tube.yaml")
res = solve(sc.space, sc.K, sc.T, sc.config)
w = res.witness
print(f"\nray tube: {res.verdict} after {res.outer_iterations} iterations")
print(f"escape length {w.length:.3f}, chord spread {w.spread:.2e} at probe distance {w.probe:.3f}")
