"""Grushin plane (f = x): geodesics from the origin against their closed form,
and the cut locus of the origin on the y axis."""
import math

import numpy as np

from ars2.cutlocus import PointSource, cut_locus, propagate_front
from ars2.frames import Ars
from ars2.geodesics import GeodesicState, flow_geodesic

ars = Ars.f_chart("x")

for c in (0.5, 1.0, 2.0):
    g = flow_geodesic(ars, GeodesicState(0.0, 0.0, 1.0, c), 3.0)
    x = np.sin(c * g.t) / c
    y = (g.t / 2 - np.sin(2 * c * g.t) / (4 * c)) / c
    err = max(np.max(np.abs(g.states[0] - x)), np.max(np.abs(g.states[1] - y)))
    print(f"c={c}: max deviation from closed form {err:.1e}, H drift {np.ptp(g.H):.1e}")

# p_x = +1 and p_x = -1 families meet on x = 0 at t = pi/c
src = PointSource(ars, (0.0, 0.0), math.pi / 2)
fp = propagate_front(ars, src, (0.45, 1.3), t_max=3.2, n_a=96, spacing="lin")
fn = propagate_front(ars, src, (-1.3, -0.45), t_max=3.2, n_a=96, spacing="lin")
t = np.linspace(1.6, 3.0, 6)
b = cut_locus(ars, fp, fn, t, label="origin").branch("origin")
for ti, xi, yi in zip(b["t_cut"], b["x"], b["y"]):
    print(f"t={ti:.3f}  cut=({xi:+.1e}, {yi:.6f})  t^2/(2 pi)={ti**2 / (2 * math.pi):.6f}")
