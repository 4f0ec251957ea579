"""Euler-Lagrange equations and natural boundary conditions on the flat boundary x_n = 0.

Three densities of increasing order.  For each one we print the interior
equation and the conditions that any critical graph must satisfy on the
boundary when its boundary values are left free, then check the
first-order case against the familiar form dL/du_n = 0.
"""

from natbc.jet import Lagrangian, diff_partial, equivalent, restrict_to_boundary
from natbc.jet.expr import Dep
from natbc.variational import boundary_space, euler_lagrange, natural_boundary_conditions

cases = [
    ("Dirichlet energy", Lagrangian.parse("u_x^2/2", 1, 1, 1)),
    ("minimal surface", Lagrangian.parse("sqrt(1 + u_x^2 + u_y^2)", 2, 1, 1)),
    ("elastic beam", Lagrangian.parse("u_xx^2/2 + u*x", 1, 1, 2)),
]

for title, L in cases:
    sp = boundary_space(L)
    print(f"{title}: L = {L}")
    print(f"  EL:  {sp.format(euler_lagrange(L)[0])} = 0")
    for (j, alpha), e in natural_boundary_conditions(L).items():
        print(f"  NBC[alpha={alpha}]:  {sp.format(e)} = 0")
    print()

# For first-order densities the condition is just the normal momentum on the boundary.
L = cases[1][1]
normal = Dep(0, (0, 1))
classical = restrict_to_boundary(diff_partial(L.density, normal), 2)
print("minimal surface NBC equals dL/du_y restricted to y = 0:", equivalent(natural_boundary_conditions(L)[(0, 0)], classical))
