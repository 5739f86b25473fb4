"""
Pinching thresholds for warped products
=======================================

How fast do the generating curvature terms of a doubly warped metric
approach -1 as the warp profiles are stretched?
"""

import numpy as np

from warpcurv import models
from warpcurv.pinching import (
    SamplingGrid,
    WarpFamily,
    curvature_range,
    family_metric,
    find_alpha0,
    geometric_grid,
    linear_grid,
)
from warpcurv.warp import WarpFunction

# Two exponential warps over factors whose curvature sits somewhere in [-1, 1].
exp = WarpFunction.exp()
fam = WarpFamily(exp, exp, (1.0, 3.0), (-1.0, 1.0), (-1.0, 1.0), name="exp/exp")

# The curvature terms deviate from -1 by at most e^{-2 alpha t}, worst at t = 1.
rep = find_alpha0(fam, eps=0.1, alpha_grid=linear_grid(0.5, 3.0, 0.01))
print(f"alpha0 on the grid: {rep.alpha0:.2f}   closed form: {np.log(10) / 2:.4f}")

# Below the threshold the report names the offending term and time.
for row in rep.table[::40]:
    print(f"  alpha={row['alpha']:.2f}  max|term+1|={row['max_deviation']:.3e}  worst={row['witness_term']}")

# cosh/cosh with a fuzzy hyperbolic factor: here the mixed term sech^2 is what binds.
cosh = WarpFunction.cosh()
fam2 = WarpFamily(cosh, cosh, (1.0, 3.0), (-1.5, -0.5), None, name="cosh/cosh")
a0 = find_alpha0(fam2, 0.1, linear_grid(0.5, 4.0, 0.01)).alpha0
print(f"cosh/cosh alpha0 = {a0:.2f}   (arccosh(sqrt(10)) = {np.arccosh(np.sqrt(10)):.4f})")

# Sampled sectional curvatures for one concrete metric from the family, to see
# that the term bracket really contains every sampled plane.
metric = family_metric(fam2, 2.0, models.hyperbolic_cylinder(), models.flat_circle())
pr = curvature_range(metric, SamplingGrid(n_t=64, planes=30))
print(f"alpha=2: sampled K in [{pr.K_min:.4f}, {pr.K_max:.4f}], terms bracket it: {pr.brackets()}")

# The geometric grids used for r and alpha sweeps
print("geometric grid 6..40, ratio 1.5:", np.round(geometric_grid(6, 40, 1.5), 3))
