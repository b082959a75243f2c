"""Cut locus of the singular set for f = y - x^2 (1 + x) near its tangency point.

Sweeps both sides of Z, compares the measured branches with the jet
predictions and writes an SVG overlay next to this script.
"""
from pathlib import Path

import numpy as np

from ars2 import _emit
from ars2.cutlocus import fit_asymptote, lower_window, z_cut_branch
from ars2.frames import Ars, trace_singular_set
from ars2.jets import K, F3Params, predict_cut_coefficients

ars = Ars.f_chart("y - x^2*(1+x)", domain=(-0.25, 0.25, -0.1, 0.1))

# upper side: cut time ~ a, cut point ~ (-a^2/2, a^2)
up = z_cut_branch(ars, 1, (5e-4, 0.12), np.geomspace(1e-3, 0.1, 25)).branch("upper")
print("upper slope x/y:", fit_asymptote(up["y"], up["x"]).coefficient)

# lower side: geodesics wind once around an elliptic period before meeting
eta = np.geomspace(0.03, 0.15, 10)
lo = z_cut_branch(ars, -1, (1e-4, 0.05), 2 * K * eta, window=lower_window(1.0, 0.6)).branch("lower")
print("lower exponent:", fit_asymptote(lo["y"], lo["x"], "power-law").exponent)

pred = predict_cut_coefficients(F3Params.make("1 + x"), 0.01)["lower"]
for e, y in zip(eta, lo["y"]):
    print(f"eta0={e:.3f}  y/(eta0^3 y3)={y / (pred['y_eta3'] * e**3):.4f}  "
          f"next order {1 + pred['y_eta4'] / pred['y_eta3'] * e:.4f}")

Zc = trace_singular_set(ars, (0.2, 0.048))
plot = _emit.SvgPlot(ars.domain, title="cut locus of Z")
plot.polyline(Zc.points, "Z")
plot.polyline(np.c_[up["x"], up["y"]], "cut")
plot.polyline(np.c_[lo["x"], lo["y"]], "cut")
out = Path(__file__).with_name("cut_locus_example.svg")
out.write_text(plot.render())
print("wrote", out)
