"""Minimize the limiting energy for G = diag(1, 1, 1 + x1^2).

The unknowns are the out-of-plane displacement v and the in-plane w. The
curvature term is a constant floor: (1/1440) int Q2(R_i3j3). With
mu = lambdaL = 1 it equals (32/3)(1/4 + pi/8)/5760 on the unit square, and
the minimizer should drive the other two terms to zero.
"""

import math
import time

from prestrain import ElasticModel, Poly2D, minimize_ex1
from prestrain.grid import Grid2D

target = (32 / 3) * (0.25 + math.pi / 8) / 5760
model = ElasticModel()
for n in (17, 33, 65):
    t0 = time.perf_counter()
    r = minimize_ex1(Poly2D([1, 0, 0, 1, 0, 0]), model, Grid2D.square(n))
    b = r.breakdown
    print(f"{n:>3}x{n:<3} total {b.total:.7e} (rel. err {abs(b.total - target) / target:.1e})  "
          f"stretching {b.stretching_term:.1e}  bending {b.bending_term:.1e}  "
          f"{r.iterations} iterations, {time.perf_counter() - t0:.2f} s")
print(f"target   {target:.7e}")

# For lambda = (1 + 0.3 x1)^2 the metric is flat and the minimum is zero.
flat = minimize_ex1(Poly2D([1, 0.6, 0, 0.09, 0, 0]), model, Grid2D.square(33))
print(f"flat lambda: total {flat.breakdown.total:.2e}")
