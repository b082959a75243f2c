"""Predictor-corrector tracing of zero sets of scalar fields in the plane."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class TraceError(RuntimeError):
    pass


@dataclass
class Curve:
    """Ordered samples of a planar curve.

    ``params`` is the curve parameter (arclength unless ``arclength`` is False),
    ``points`` and ``tangents`` have shape (n, 2). ``markers`` holds points of
    interest found during tracing (e.g. tangency candidates), as dicts.
    """

    params: np.ndarray
    points: np.ndarray
    tangents: np.ndarray
    closed: bool = False
    arclength: bool = True
    markers: list = field(default_factory=list)
    stop_reasons: tuple = ()

    def __len__(self):
        return len(self.params)

    def at(self, s):
        """Linear interpolation of point and tangent at parameter s."""
        s = np.asarray(s, float)
        pts = np.stack([np.interp(s, self.params, self.points[:, k]) for k in range(2)], -1)
        tan = np.stack([np.interp(s, self.params, self.tangents[:, k]) for k in range(2)], -1)
        return pts, tan

    def to_rows(self):
        return np.column_stack([self.params, self.points, self.tangents])


def _in_box(p, box):
    return box[0] <= p[0] <= box[1] and box[2] <= p[1] <= box[3]


def newton_to_zero(fun, p, tol=1e-11, maxit=30):
    """Project p onto {fun = 0} along the gradient. Returns (point, ok)."""
    p = np.array(p, float)
    for _ in range(maxit):
        v, g = fun(p)
        gg = g @ g
        if gg == 0 or not np.isfinite(v):
            return p, False
        p = p - v * g / gg
        if abs(v) <= tol:
            v, g = fun(p)
            return p, abs(v) <= tol * 10 and np.isfinite(v)
    return p, False


def trace_zero_set(fun, seed, box, h0=2e-3, hmin=1e-5, hmax=1e-2, tol=1e-11,
                   grad_tol=1e-12, max_steps=20000, orient=None, directions=(1.0, -1.0)):
    """Trace the connected component of {fun = 0} through ``seed``.

    ``fun(p)`` returns (value, gradient). The curve is traced in both
    directions until it leaves ``box``, closes up, or the gradient degenerates.
    ``orient`` optionally gives a preferred direction for the tangent at the seed;
    ``directions=(1.0,)`` traces only forward along it.
    """
    p0, ok = newton_to_zero(fun, seed, tol)
    if not ok:
        raise TraceError(f"seed {tuple(seed)} does not converge onto the zero set")
    if not _in_box(p0, box):
        raise TraceError("corrected seed lies outside the box")

    def tangent(p):
        _, g = fun(p)
        n = np.hypot(*g)
        if n <= grad_tol:
            return None
        return np.array([-g[1], g[0]]) / n

    t0 = tangent(p0)
    if t0 is None:
        raise TraceError("gradient vanishes at the seed")
    if orient is not None and t0 @ np.asarray(orient, float) < 0:
        t0 = -t0

    branches = []
    reasons = []
    closed = False
    markers = []
    for direction in directions:
        pts = [p0]
        tans = [t0]
        p, t = p0, direction * t0
        h = h0
        reason = "max_steps"
        length = 0.0
        for _ in range(max_steps):
            if h < hmin:
                raise TraceError(f"step size underflow near {tuple(p)}")
            q, ok = newton_to_zero(fun, p + h * t, tol, maxit=8)
            tq = tangent(q) if ok else None
            if tq is None and ok:
                markers.append({"kind": "gradient_degenerate", "point": tuple(q)})
                reason = "degenerate"
                break
            if not ok or np.hypot(*(q - p)) > 1.5 * h or np.hypot(*(q - p - h * t)) > 0.2 * h:
                h *= 0.5
                continue
            if tq @ t < 0:
                tq = -tq
            if tq @ t < 0.98:
                h *= 0.5
                continue
            if not _in_box(q, box):
                reason = "box"
                break
            length += np.hypot(*(q - p))
            p, t = q, tq
            pts.append(p)
            tans.append(direction * t)
            if length > 4 * h and np.hypot(*(p - p0)) < 0.75 * h and len(pts) > 8:
                closed = True
                reason = "closed"
                break
            if tq @ (tans[-2] * direction) > 0.999:
                h = min(h * 1.5, hmax)
        branches.append((pts, tans))
        reasons.append(reason)
        if closed:
            break

    fwd_pts, fwd_tans = branches[0]
    if closed or len(branches) == 1:
        pts = np.array(fwd_pts)
        tans = np.array(fwd_tans)
    else:
        back_pts, back_tans = branches[1]
        pts = np.array(back_pts[:0:-1] + fwd_pts)
        tans = np.array(back_tans[:0:-1] + fwd_tans)
    seg = np.hypot(*np.diff(pts, axis=0).T)
    s = np.r_[0.0, np.cumsum(seg)]
    i0 = 0 if (closed or len(branches) == 1) else len(branches[1][0]) - 1
    s -= s[i0]
    return Curve(s, pts, tans, closed=closed, arclength=True, markers=markers,
                 stop_reasons=tuple(reasons))
