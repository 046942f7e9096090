"""Heat-kernel estimates of perimeter and partition length on a disc.

Run:  python3 demos/01_heat_kernel_energies.py

A radius pi/2 disc on [-pi, pi)^2 has perimeter pi^2.  The short-time heat
content sqrt(pi/tau) * int u G_tau*(1-u) recovers it, and the same idea
measures the diameter cut by a bisection.  Two energies are compared:
the exact pairwise form E_hat, and E_tilde, which is written against the
region indicator and is what the solver maximises over regions.
"""

import numpy as np

from fencelab import GridSpec, Partition, rasterize
from fencelab.shapes import ShapeSpec
from fencelab.energy import energy_hat, energy_tilde, isoperimetric_ratio, perimeter_estimate

grid = GridSpec(2, 256)
disc = rasterize(ShapeSpec("disc", {"radius": np.pi / 2}), grid)
print(f"grid 256^2, dx = {grid.dx:.5f}, disc cells = {disc.count}")

print("\nperimeter estimate (exact pi^2 = 9.8696):")
for k in (0.5, 1, 2, 4):
    tau = k * grid.dx
    print(f"  tau = {k:>3} dx   P = {perimeter_estimate(disc, tau):.4f}   iso = {isoperimetric_ratio(disc, tau):.4f}")

x = grid.coords()[0]
halves = Partition(grid, 2, np.where(disc.values, (x >= 0).astype(int), -1))
print("\nbisection by the diameter (exact cut length pi = 3.1416):")
for k in (1, 2, 4):
    tau = k * grid.dx
    e_hat = energy_hat(halves, tau)
    e_til = energy_tilde(disc, halves, tau)
    print(f"  tau = {k} dx   E_hat = {e_hat:.4f}   E_tilde = {e_til:.4f}")
print("\nE_hat counts each interface from both sides, so it reads about 2 pi.")
print("E_tilde sits above E_hat, and the relative gap narrows only slowly as tau shrinks.")
