"""Capacity of a few bodies against closed forms.

The single-layer solve with unit negative boundary data gives the
equilibrium density; minus its surface integral is the electrostatic
capacity (a sphere of radius a has capacity a).  The script also shows the
density itself converging to the uniform value -1/(4 pi a^2) * a ... i.e.
-1/(4 pi) on the unit sphere.
"""

import numpy as np

from hardscatter import (
    CappedCylinder,
    Ellipsoid,
    Sphere,
    capacity,
    make_body,
    mu0,
)

print("== capacity convergence on the unit sphere ==")
for level in (2, 3, 4, 5):
    mesh = make_body(Sphere(1.0), level)
    value = capacity(mesh)
    print(f"  level {level}: {mesh.n_triangles:5d} panels  "
          f"C = {value:.6f}  (exact 1, err {abs(value - 1):.2e})")

print("\n== prolate ellipsoid (2, 1, 1) ==")
exact = np.sqrt(3.0) / np.arccosh(2.0)
mesh = make_body(Ellipsoid(2.0, 1.0, 1.0), 4)
value = capacity(mesh)
print(f"  C = {value:.6f}  closed form sqrt(a^2-b^2)/arccosh(a/b) = {exact:.6f}")

print("\n== capped cylinder (1, 2): no closed form, edges and all ==")
mesh = make_body(CappedCylinder(1.0, 2.0), 3)
print(f"  C = {capacity(mesh):.6f}  ({mesh.n_triangles} panels)")

print("\n== the equilibrium density on the unit sphere is uniform ==")
mesh = make_body(Sphere(1.0), 4)
density = mu0(mesh)
target = -1.0 / (4.0 * np.pi)
print(f"  mean {density.values.mean():.8f}  target {target:.8f}")
print(f"  max relative deviation {np.abs(density.values / target - 1).max():.2%}")
