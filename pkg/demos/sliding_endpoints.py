"""Graphs whose endpoints slide along curves.

Two problems with known answers.  A loaded string pinned at the origin with
its right end free on t = 1 settles to y = t^2/2 - t, which has zero slope at
the free end.  The shortest graph between two unit circles is the segment
joining their nearest points, meeting both circles at right angles.
"""

import numpy as np

from natbc.contact import BoundaryCurve, source_space
from natbc.jet import Lagrangian
from natbc.solver import Problem1D, check_residuals_1d, graph_length, incidence_angles, minimize_1d

sp = source_space(1)


def lagrangian(density):
    return Lagrangian.parse(density, 1, 1, 1, indep=sp.indep, dep=sp.dep)


string = Problem1D(lagrangian("y_t^2/2 + y"), BoundaryCurve.point(0, 0), BoundaryCurve.vertical_line(1.0), sigma1=0.5)
sol = minimize_1d(string, N=200)
print("loaded string")
print(f"  Newton iterations: {sol.iterations}")
print(f"  max |y - (t^2/2 - t)|: {np.max(np.abs(sol.y - (sol.t**2 / 2 - sol.t))):.2e}")
print(f"  slope at the free end: {sol.slopes()[-1]:.2e}")

circles = Problem1D(
    lagrangian("sqrt(1 + y_t^2)"),
    BoundaryCurve.parse("cos(s)", "sin(s)", (-1.5, 1.5), "left circle"),
    BoundaryCurve.parse("4 + cos(s)", "sin(s)", (1.7, 4.6), "right circle"),
    sigma0=0.3,
    sigma1=2.6,
)
sol = minimize_1d(circles, N=200)
a0, a1 = incidence_angles(circles, sol)
res = check_residuals_1d(circles, sol)
print("\ncircle to circle")
print(f"  endpoint parameters: {sol.sigma0:.3e}, {sol.sigma1:.9f} (pi = {np.pi:.9f})")
print(f"  length: {graph_length(sol):.12f}")
print(f"  incidence angles: {a0:.6f}, {a1:.6f} degrees")
print(f"  transversality residuals: {res['transversality_residual_0']:.1e}, {res['transversality_residual_1']:.1e}")
