"""
Limit surfaces and a safe mid surface
=====================================

Noisy soundings are enclosed by a lower and an upper surface in the same
spline space.  Blending the fit towards the upper surface in shallow water
gives a surface that errs on the safe side where depth matters most.
"""

import numpy as np

from lrterrain.fitting import FitConfig, PointCloud, adaptive_fit, limit_surfaces, weighted_mid_surface

rng = np.random.default_rng(2)

###############################################################################
# Noisy soundings
# ---------------
# Depth runs from -40 m in the west to 0 m in the east, with 10 cm noise.

x, y = rng.uniform(0, 100, (2, 20_000))
z = -40 + 0.4 * x + 2 * np.sin(y / 10) + rng.normal(scale=0.1, size=x.size)
cloud = PointCloud(np.column_stack([x, y, z]))
surf = adaptive_fit(cloud, FitConfig(threshold=0.5, max_iterations=3)).surface

###############################################################################
# Enclosing surfaces
# ------------------

lower, upper = limit_surfaces(surf, cloud)
below = lower.evaluate(x, y) - z
above = z - upper.evaluate(x, y)
print(f"lower above a point by at most {below.max():.1e} m; upper below by at most {above.max():.1e} m")
print(f"mean band width {np.mean(upper.evaluate(x, y) - lower.evaluate(x, y)):.3f} m")

###############################################################################
# Depth-weighted blend
# --------------------
# Deeper than 20 m the fit is kept; shallower than 0 m the upper surface is
# used; in between the coefficients are mixed linearly.

mid = weighted_mid_surface(surf, upper, d1=-20.0, d2=0.0)
for xs in (10.0, 50.0, 90.0):
    f, m, u = (float(s.evaluate(xs, 50.0)) for s in (surf, mid, upper))
    print(f"x={xs:5.1f}: fit {f:8.3f}  mid {m:8.3f}  upper {u:8.3f}")
