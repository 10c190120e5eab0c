"""
Short sides collapse in H^2 but not in the plane
=================================================

Take right triangles with a leg ``h`` from the apex ``x`` to the right-angle
vertex ``y`` and a hypotenuse only ``eps`` longer.  In the hyperbolic plane the
other leg ``d(y, z)`` is forced to zero as ``h`` grows and ``eps`` shrinks; in the
Euclidean plane a unit leg survives with ``eps -> 0``.
"""
import math

import numpy as np

from catfix import lemma_lab as lab

# hyperbolic side: h_n = n, eps_n = 1/n, exact leg versus the closed-form bound
n = np.arange(1, 51, dtype=float)
rep = lab.lemma32_collapse(n, 1.0 / n)
print("    n      exact leg      bound   sqrt(2/n)")
for row in rep.rows[::7]:
    k, _, _, ex, bd = row[:5]
    print(f"{k:5d}  {ex:12.6f}  {bd:9.6f}  {math.sqrt(2 / k):9.6f}")

# the leg tends to zero, but only like sqrt(2/n): eps_n = 1/n is a slow schedule
for line in rep.summary_lines():
    print(line)

# Euclidean side: keep the leg at 1 and watch eps vanish like 1 / (2h)
print("\n       h   planar eps   h * eps   hyperbolic eps")
for h in (1.0, 10.0, 100.0, 1e4):
    eps = float(lab.remark33_planar(h))
    print(f"{h:8g}  {eps:11.3e}  {h * eps:8.5f}  {float(lab.remark33_hyperbolic(h)):14.10f}")

# the hyperbolic counterpart needs eps >= log cosh 1 to host a unit leg
print(f"\nlog cosh 1 = {math.log(math.cosh(1.0)):.10f}")
