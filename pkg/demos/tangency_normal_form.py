"""Normal form at a tangency point and the spade set through it.

For f = y - x^2 (1 + x) the origin is a tangency point. The canonical chart
has fbar = 0 and fbar_x = 0 at the origin, fbar_xx = -2 along the curve, and
the spade branch leaves the origin with dx/dy = -0.3.
"""
import numpy as np

from ars2.frames import Ars, point_class, tangency_type
from ars2.normalform import canonical_chart, spade_branch, verify_conditions

ars = Ars.f_chart("y - x^2*(1+x)")
print(point_class(ars, (0.0, 0.0)).kind, tangency_type(ars, (0.0, 0.0)))

br = spade_branch(ars, (0.0, 0.0), length=0.1)
v = br.velocity(0.0)[:, 0]
print("spade tangent dx/dy:", v[0] / v[1])

g = np.linspace(-0.05, 0.05, 11)
chart = canonical_chart(ars, (0.0, 0.0), g, g, length=0.2)
rep = verify_conditions(chart)
print("suite", rep.suite, "ok" if rep.ok else "FAILED")
for k, r in rep.residuals.items():
    print(f"  {k}: {r:.2e}")
print("fbar along xbar at ybar = 0:", np.round(chart.f_tilde[:, 5], 6))

# two structures with the same curvature but different invariants
for f in ("x + 1", "1/(x+1)^2"):
    c = canonical_chart(Ars.f_chart(f), (0.0, 0.0), np.array([0.0, 0.2, 0.4]), np.array([0.0]))
    print(f"{f:>10}: fbar(xbar) =", np.round(c.f_tilde[:, 0], 6))
