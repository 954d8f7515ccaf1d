"""What is the sectional curvature of the eps-family ambient metric?

The family cosh^2(eps*t) g_base + dt^2 interpolates between a flat product
(eps -> 0) and the hyperbolic model (eps = 1, hyperbolic base).  With the
normalized base warp sinh(eps*r)/eps the answer comes out constant; sampling
random point/plane pairs through the finite-difference curvature tensor pins
the constant to -eps^2 (and not -eps) to ten digits.
"""

import numpy as np

from graphcurv.charts import EpsilonChart
from graphcurv.riemann import sectional_spread

bounds = [(0.3, 1.2), (0.3, 6.0), (-0.3, 0.3)]  # (phi, r, t) sample box

print(f"{'eps':>6} {'sampled K (mean)':>18} {'rel spread':>11} {'-eps^2':>10} {'-eps':>8}")
for eps in (0.05, 0.1, 0.2, 0.4):
    chart = EpsilonChart(n=2, eps=eps, normalized=True)
    vals = sectional_spread(chart.metric_at, bounds, n_samples=40, seed=2,
                            h=1e-3, big_h=2e-3)
    mean = float(np.mean(vals))
    spread = float((np.max(vals) - np.min(vals)) / abs(mean))
    print(f"{eps:6.2f} {mean:18.10f} {spread:11.1e} {-eps**2:10.4f} {-eps:8.2f}")

print()
print("the sampled constant tracks -eps^2 across the family.  the literal")
print("base warp sinh(eps*r) samples the same constant away from the axis")
print("(locally the same metric), but it closes the axis with a cone angle")
print("2*pi*eps instead of 2*pi, so only the normalized warp is a smooth")
print("constant-curvature model:")
for eps, normalized in ((0.4, True), (0.4, False)):
    chart = EpsilonChart(n=2, eps=eps, normalized=normalized)
    r = 1e-6
    w, _ = chart.base_warp(r)
    label = "normalized" if normalized else "literal   "
    print(f"  eps = {eps}, {label} warp: circumference/(2 pi r) -> {w / r:.4f} "
          f"as r -> 0")
