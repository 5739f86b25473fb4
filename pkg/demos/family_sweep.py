"""
The glued families and their curvature
======================================

Build the reference tube, the glued family with the identity twist, and the
homotopy family between a twisted gluing and the tube.  Then watch the sampled
curvature pinch towards -1 as the tube gets longer.
"""

import numpy as np

from warpcurv import models
from warpcurv.families import (
    breakpoint_smoothness,
    build_lambda_r,
    build_lambda_r_s,
    build_rho_r,
    make_isotopy,
)
from warpcurv.pinching import SamplingGrid, curvature_range, find_min_r, geometric_grid

H = models.hyperbolic_cylinder()  # cosh^2(y) dx^2 + dy^2, curvature -1

# Points are (x, y, u, t): factor coordinates, the circle coordinate u, and t in [0, 6].
p = np.array([[1.0, 0.3, 2.0, t] for t in (0.5, 2.5, 3.5, 5.5)])
rho, lam = build_rho_r(12.0, H), build_lambda_r(12.0, H)
np.set_printoptions(precision=4)
print("circle coefficient, tube   :", rho(p)[:, 2, 2])
print("circle coefficient, glued  :", lam(p)[:, 2, 2])

# The branches meet with matching derivatives up to order two at t = 2, 3, 4, 5.
rep = breakpoint_smoothness(lam, order=2)
for b in rep.breakpoints:
    print(f"  t={b['t']:.0f}  passed={b['passed']}  mismatch by order={[f'{r:.1e}' for r in b['mismatch']]}")

# A twist supported in a small ball of the factor, undone by an isotopy.
iso = make_isotopy(2, "bump_rotation", 0.9, [np.pi, 0.0], 0.5)
for s in (0.0, 0.5, 1.0):
    m = build_lambda_r_s(12.0, s, iso, H)
    print(f"s={s}: smooth={breakpoint_smoothness(m, 2).passed}")
print("s = 1 reproduces the tube:", np.array_equal(build_lambda_r_s(12.0, 1.0, iso, H)(p), rho(p)))

# Curvature pinching as r grows.
grid = SamplingGrid(n_t=64, n_space=2, planes=10)
for r in (6.0, 12.0, 24.0):
    cr = curvature_range(build_lambda_r(r, H), grid)
    print(f"r={r:>4}: K in [{cr.K_min:.6f}, {cr.K_max:.6f}]")

mr = find_min_r(lambda r: build_lambda_r(r, H), 0.2, geometric_grid(6, 40, 1.5), grid)
print("smallest r with all K in (-1.2, -0.8):", mr.r_star)
