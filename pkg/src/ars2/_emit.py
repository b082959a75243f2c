"""CSV, JSON and SVG writers used by the command line.

Output is deterministic: floats are written with repr precision, JSON keys are
sorted, and NaN or infinite values become ``null`` (JSON) or ``nan`` (CSV).
"""

from __future__ import annotations

import io
import json
import math

import numpy as np


def clean(obj):
    """Convert numpy scalars/arrays and non-finite floats into JSON-safe values."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def dumps_json(obj) -> str:
    return json.dumps(clean(obj), indent=2, sort_keys=True) + "\n"


def _fmt(v):
    if isinstance(v, str):
        return v
    v = float(v)
    if math.isnan(v):
        return "nan"
    return repr(v)


def dumps_csv(columns, rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(columns) + "\n")
    for r in rows:
        buf.write(",".join(_fmt(v) for v in r) + "\n")
    return buf.getvalue()


# --- marching squares ------------------------------------------------------------

# edges: 0 bottom (i,j)-(i+1,j), 1 right, 2 top, 3 left; cases index corner bits
_CASES = {
    1: [(3, 0)], 2: [(0, 1)], 3: [(3, 1)], 4: [(1, 2)], 5: [(3, 2), (0, 1)], 6: [(0, 2)],
    7: [(3, 2)], 8: [(2, 3)], 9: [(2, 0)], 10: [(2, 1), (0, 3)], 11: [(2, 1)], 12: [(1, 3)],
    13: [(1, 0)], 14: [(0, 3)],
}


def contour_segments(xs, ys, Z, level=0.0):
    """Line segments of {Z = level} on the grid Z[i, j] = Z(xs[i], ys[j])."""
    Z = np.asarray(Z, float) - level
    segs = []
    for i in range(len(xs) - 1):
        for j in range(len(ys) - 1):
            c = (Z[i, j], Z[i + 1, j], Z[i + 1, j + 1], Z[i, j + 1])
            if not all(math.isfinite(v) for v in c):
                continue
            idx = sum(1 << k for k, v in enumerate(c) if v > 0)
            if idx not in _CASES:
                continue
            corners = ((xs[i], ys[j]), (xs[i + 1], ys[j]), (xs[i + 1], ys[j + 1]), (xs[i], ys[j + 1]))

            def edge_point(e):
                k0, k1 = e, (e + 1) % 4
                t = c[k0] / (c[k0] - c[k1])
                (x0, y0), (x1, y1) = corners[k0], corners[k1]
                return (x0 + t * (x1 - x0), y0 + t * (y1 - y0))

            for e0, e1 in _CASES[idx]:
                segs.append((edge_point(e0), edge_point(e1)))
    return segs


# --- SVG ---------------------------------------------------------------------------

STYLES = {
    "Z": {"stroke": "#000000", "stroke-dasharray": "1.5,3", "stroke-linecap": "round"},
    "cut": {"stroke": "#c0392b", "stroke-dasharray": "6,4"},
    "spade": {"stroke": "#1f4e9c"},
    "level": {"stroke": "#555555", "stroke-width": "0.8"},
    "geodesic": {"stroke": "#2e8b57", "stroke-width": "0.8"},
}

LEGEND = {"Z": "singular set (dotted)", "cut": "cut locus from the singular set (dashed)",
          "spade": "spade set (solid)", "level": "level sets", "geodesic": "geodesics"}


class SvgPlot:
    """A fixed-size plot of the box (x0, x1, y0, y1) with polylines and a legend."""

    def __init__(self, box, width=520, height=520, margin=40, title=""):
        self.box = tuple(float(v) for v in box)
        self.w, self.h, self.m = width, height, margin
        self.title = title
        self.items = []
        self.used = []

    def _xy(self, x, y):
        x0, x1, y0, y1 = self.box
        px = self.m + (x - x0) / (x1 - x0) * (self.w - 2 * self.m)
        py = self.h - self.m - (y - y0) / (y1 - y0) * (self.h - 2 * self.m)
        return px, py

    def _style(self, kind, width=1.4):
        st = {"fill": "none", "stroke-width": str(width)}
        st.update(STYLES.get(kind, {"stroke": "#000000"}))
        if kind not in self.used:
            self.used.append(kind)
        return " ".join(f'{k}="{v}"' for k, v in st.items())

    def polyline(self, pts, kind):
        """pts: (n, 2); NaN rows split the line."""
        pts = np.asarray(pts, float)
        runs, cur = [], []
        for x, y in pts:
            if math.isfinite(x) and math.isfinite(y):
                cur.append(self._xy(x, y))
            elif cur:
                runs.append(cur)
                cur = []
        if cur:
            runs.append(cur)
        for r in runs:
            if len(r) < 2:
                continue
            coords = " ".join(f"{px:.2f},{py:.2f}" for px, py in r)
            self.items.append(f'<polyline points="{coords}" {self._style(kind)}/>')

    def segments(self, segs, kind):
        if not segs:
            return
        d = " ".join("M{:.2f},{:.2f} L{:.2f},{:.2f}".format(*self._xy(*a), *self._xy(*b)) for a, b in segs)
        self.items.append(f'<path d="{d}" {self._style(kind)}/>')

    def points(self, pts, kind, r=2.5):
        color = STYLES.get(kind, {}).get("stroke", "#000000")
        if kind not in self.used:
            self.used.append(kind)
        for x, y in np.asarray(pts, float).reshape(-1, 2):
            if math.isfinite(x) and math.isfinite(y):
                px, py = self._xy(x, y)
                self.items.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="{r}" fill="{color}"/>')

    def heatmap(self, xs, ys, V):
        """Cell colors from V[i, j] at (xs[i], ys[j]) on a blue-white-red scale."""
        V = np.asarray(V, float)
        fin = V[np.isfinite(V)]
        if fin.size == 0:
            return
        lo, hi = np.percentile(fin, [2, 98])
        span = max(hi - lo, 1e-300)
        dx = np.diff(xs).mean() if len(xs) > 1 else 1.0
        dy = np.diff(ys).mean() if len(ys) > 1 else 1.0
        for i, x in enumerate(xs):
            for j, y in enumerate(ys):
                v = V[i, j]
                if not math.isfinite(v):
                    continue
                t = min(max((v - lo) / span, 0.0), 1.0)
                r, g, b = _diverging(t)
                px0, py0 = self._xy(x - dx / 2, y + dy / 2)
                px1, py1 = self._xy(x + dx / 2, y - dy / 2)
                self.items.append(f'<rect x="{px0:.2f}" y="{py0:.2f}" width="{px1 - px0 + 0.3:.2f}" '
                                  f'height="{py1 - py0 + 0.3:.2f}" fill="rgb({r},{g},{b})" stroke="none"/>')

    def render(self) -> str:
        x0, x1, y0, y1 = self.box
        out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.w}" height="{self.h}" '
               f'viewBox="0 0 {self.w} {self.h}">',
               f'<rect x="0" y="0" width="{self.w}" height="{self.h}" fill="#ffffff"/>']
        if self.title:
            out.append(f'<text x="{self.w / 2:.1f}" y="18" font-size="13" text-anchor="middle" '
                       f'font-family="sans-serif">{_esc(self.title)}</text>')
        out.extend(self.items)
        pa, pb = self._xy(x0, y1), self._xy(x1, y0)
        out.append(f'<rect x="{pa[0]:.2f}" y="{pa[1]:.2f}" width="{pb[0] - pa[0]:.2f}" '
                   f'height="{pb[1] - pa[1]:.2f}" fill="none" stroke="#888888" stroke-width="0.8"/>')
        for lab, (px, py), anchor in ((f"{x0:.3g}", self._xy(x0, y0), "start"),
                                      (f"{x1:.3g}", self._xy(x1, y0), "end")):
            out.append(f'<text x="{px:.1f}" y="{py + 14:.1f}" font-size="10" text-anchor="{anchor}" '
                       f'font-family="sans-serif">{lab}</text>')
        for lab, (px, py) in ((f"{y0:.3g}", self._xy(x0, y0)), (f"{y1:.3g}", self._xy(x0, y1))):
            out.append(f'<text x="{px - 4:.1f}" y="{py:.1f}" font-size="10" text-anchor="end" '
                       f'font-family="sans-serif">{lab}</text>')
        ly = self.m + 12
        for kind in self.used:
            if kind not in LEGEND:
                continue
            lx = self.w - self.m - 170
            out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 26}" y2="{ly}" {self._style(kind, 1.6)}/>')
            out.append(f'<text x="{lx + 32}" y="{ly + 4}" font-size="10" font-family="sans-serif">'
                       f'{_esc(LEGEND[kind])}</text>')
            ly += 15
        out.append("</svg>")
        return "\n".join(out) + "\n"


def _diverging(t):
    if t < 0.5:
        u = t / 0.5
        return int(40 + 215 * u), int(80 + 175 * u), 255
    u = (t - 0.5) / 0.5
    return 255, int(255 - 175 * u), int(255 - 215 * u)


def _esc(s):
    return str(s).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
