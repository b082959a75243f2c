"""Canonical transversal curves, the chart built from them by flowing unit
geodesics, the recovered invariant f~ and the per-kind condition suites."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Chebyshev
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .curvature import (critical_point_class, curvature_jet, gauss_curvature, metric_arclength,
                        spade_indicator, spade_value_grad, trace_crest)
from .expr import FieldExpr, as_field, diff, parse_field
from .frames import Ars, PointClass, bracket, point_class
from .geodesics import FlowError, chart_map


class NormalFormError(RuntimeError):
    pass


class ChartFoldError(NormalFormError):
    """det DE changes sign on the grid: the chart folds, shrink the window."""


class TransversalityError(NormalFormError):
    pass


class KindMismatchError(ValueError):
    pass


# --- parameterized curves ---------------------------------------------------------

class ParamCurve:
    """A smooth curve y -> point(y) on the interval ``span``.

    Subclasses provide ``_point`` and ``_velocity`` on arrays of parameters.
    """

    span = (-math.inf, math.inf)
    kind = None
    info: dict

    def point(self, y):
        y = self._check(y)
        return self._point(y)

    def velocity(self, y):
        y = self._check(y)
        return self._velocity(y)

    def _check(self, y):
        y = np.atleast_1d(np.asarray(y, float))
        lo, hi = self.span
        if np.any(y < lo - 1e-12) or np.any(y > hi + 1e-12):
            raise ValueError(f"curve parameter outside [{lo:.6g}, {hi:.6g}]")
        return y

    def samples(self, n=201):
        lo, hi = self.span
        y = np.linspace(lo, hi, n)
        return y, self.point(y).T


class ODECurve(ParamCurve):
    """Integral curve of a planar field through q, integrated both ways with dense output."""

    def __init__(self, field_fn, q, span, kind=None, info=None, rtol=1e-12, atol=1e-14):
        self.field_fn = field_fn
        self.q = np.asarray(q, float)
        self.kind = kind
        self.info = dict(info or {})
        rhs = lambda t, p: field_fn(p[:, None])[:, 0]
        self._sols = []
        ends = []
        for end in (span[1], span[0]):
            if end == 0:
                self._sols.append(None)
                ends.append(0.0)
                continue
            sol = solve_ivp(rhs, (0.0, end), self.q, method="DOP853", rtol=rtol, atol=atol,
                            dense_output=True)
            if sol.status != 0:
                raise NormalFormError(f"curve integration stopped: {sol.message}")
            self._sols.append(sol.sol)
            ends.append(float(sol.t[-1]))
        self.span = (ends[1], ends[0])

    def _point(self, y):
        out = np.empty((2, len(y)))
        for sol, sel in ((self._sols[0], y >= 0), (self._sols[1], y < 0)):
            if sel.any():
                out[:, sel] = sol(y[sel]) if sol is not None else self.q[:, None]
        return out

    def _velocity(self, y):
        return self.field_fn(self._point(y))


class GraphCurve(ParamCurve):
    """q + s d + u(s) n with u a Chebyshev series, parameter s."""

    def __init__(self, q, d, u_series: Chebyshev, kind=None, info=None):
        self.q = np.asarray(q, float)
        self.d = np.asarray(d, float) / np.hypot(*d)
        self.n = np.array([-self.d[1], self.d[0]])
        self.u = u_series
        self.du = u_series.deriv()
        self.span = tuple(float(v) for v in u_series.domain)
        self.kind = kind
        self.info = dict(info or {})

    def _point(self, s):
        return self.q[:, None] + self.d[:, None] * s + self.n[:, None] * self.u(s)

    def _velocity(self, s):
        return self.d[:, None] + self.n[:, None] * self.du(s)


class SplineCurve(ParamCurve):
    def __init__(self, s, pts, kind=None, info=None):
        self.spline = CubicSpline(s, pts, axis=0)
        self.dspline = self.spline.derivative()
        self.span = (float(s[0]), float(s[-1]))
        self.kind = kind
        self.info = dict(info or {})

    def _point(self, y):
        return self.spline(y).T

    def _velocity(self, y):
        return self.dspline(y).T


class Reversed(ParamCurve):
    def __init__(self, base: ParamCurve):
        self.base = base
        self.span = (-base.span[1], -base.span[0])
        self.kind = base.kind
        self.info = dict(base.info)

    def _point(self, y):
        return self.base.point(-y)

    def _velocity(self, y):
        return -self.base.velocity(-y)


class Reparam(ParamCurve):
    """base(phi(t)) where phi' = rate(phi), phi(0) = 0."""

    def __init__(self, base: ParamCurve, rate, limit, kind=None, info=None):
        self.base = base
        self.rate = rate
        self.kind = kind if kind is not None else base.kind
        self.info = dict(info or base.info)
        sols, ends = [], []
        for sgn in (1.0, -1.0):
            hit = lambda t, p: abs(p[0]) - limit
            hit.terminal = True
            sol = solve_ivp(lambda t, p: [rate(p[0])], (0.0, sgn * 100 * limit), [0.0], method="DOP853",
                            rtol=1e-13, atol=1e-15, dense_output=True, events=hit)
            sols.append(sol.sol)
            ends.append(float(sol.t[-1]))
        self._sols = sols
        self.span = (ends[1], ends[0])

    def phi(self, t):
        t = np.atleast_1d(np.asarray(t, float))
        out = np.empty_like(t)
        pos = t >= 0
        if pos.any():
            out[pos] = self._sols[0](t[pos])[0]
        if (~pos).any():
            out[~pos] = self._sols[1](t[~pos])[0]
        return out

    def _point(self, t):
        return self.base.point(self.phi(t))

    def _velocity(self, t):
        e = self.phi(t)
        return self.base.velocity(e) * self.rate(e)


# --- canonical curves ---------------------------------------------------------------

def _level_field(ars: Ars):
    """Unit (for g) tangent of the K-level sets with grad K on the right."""
    def fn(p):
        x, y = p[0], p[1]
        K = curvature_jet(ars, x, y, 1)
        (a1, a2), (b1, b2) = ars.frame(x, y)
        Kx, Ky = K.coeff(1, 0), K.coeff(0, 1)
        e1K = a1 * Kx + a2 * Ky
        e2K = b1 * Kx + b2 * Ky
        A = np.sqrt(e1K ** 2 + e2K ** 2)
        sigma = np.sign(ars.orientation_M * (a1 * b2 - a2 * b1))
        u1, u2 = -sigma * e2K / A, sigma * e1K / A
        return np.array([u1 * a1 + u2 * b1, u1 * a2 + u2 * b2])
    return fn


def _grushin_field(ars: Ars):
    """Velocity along Z with c' = eps_E [F1, F2] modulo the distribution."""
    def fn(p):
        x, y = p[0], p[1]
        a1, a2, b1, b2 = ars.frame_jets(x, y, 1)
        B = bracket((a1, a2), (b1, b2))
        Bv = ars.orientation_E * np.array([B[0].value, B[1].value])
        D = a1 * b2 - a2 * b1
        tau = np.array([-D.coeff(0, 1), D.coeff(1, 0)])
        F1 = np.array([a1.value, a2.value])
        F2 = np.array([b1.value, b2.value])
        v = np.where(np.sum(F1 ** 2, 0) >= np.sum(F2 ** 2, 0), F1, F2)
        cross = lambda u, w: u[0] * w[1] - u[1] * w[0]
        lam = cross(v, Bv) / cross(v, tau)
        return lam * tau
    return fn


def _delta_direction(ars, q):
    (a1, a2), (b1, b2) = ars.frame(float(q[0]), float(q[1]))
    F1, F2 = np.array([a1, a2]), np.array([b1, b2])
    v = F1 if F1 @ F1 >= F2 @ F2 else F2
    return v / np.hypot(*v)


def _spade_values(ars, pts):
    _, h = spade_indicator(ars, (pts[0], pts[1]))
    return np.atleast_1d(np.asarray(h, float))


def spade_branch_direction(ars: Ars, q, radius=1e-3, n=720):
    """Unit direction of the spade branch through a tangency point q that is most
    transversal to the distribution (sign changes of h on a small circle)."""
    q = np.asarray(q, float)
    th = np.linspace(0.0, 2 * np.pi, n + 1)
    circle = lambda t: q[:, None] + radius * np.array([np.cos(t), np.sin(t)])
    with np.errstate(all="ignore"):
        h = _spade_values(ars, circle(th))
    delta = _delta_direction(ars, q)
    best = None
    for i in range(n):
        if not (np.isfinite(h[i]) and np.isfinite(h[i + 1])) or h[i] * h[i + 1] >= 0:
            continue
        g = lambda t: _spade_values(ars, circle(np.array([t])))[0]
        t = brentq(g, th[i], th[i + 1], xtol=1e-14)
        d = np.array([np.cos(t), np.sin(t)])
        score = abs(d[0] * delta[1] - d[1] * delta[0])
        if best is None or score > best[0]:
            best = (score, d)
    if best is None or best[0] < 0.05:
        raise NormalFormError("no spade branch transversal to the distribution near the tangency point")
    return best[1]


def spade_branch(ars: Ars, q, length=0.15, n_nodes=48, kind=None) -> GraphCurve:
    """The spade branch through a tangency point, as a graph over its tangent line.

    Nodes are Chebyshev points in s; at each node the transversal offset u solves
    h(q + s d + u n) = 0 by bracketing around a continuation predictor.
    """
    q = np.asarray(q, float)
    d = spade_branch_direction(ars, q)
    nvec = np.array([-d[1], d[0]])
    nodes = length * np.polynomial.chebyshev.chebpts1(n_nodes)
    h_at = lambda s, u: _spade_values(ars, (q + s * d + u * nvec)[:, None])[0]
    u_nodes = np.empty(n_nodes)
    for sgn in (1, -1):
        idx = np.flatnonzero(np.sign(nodes) == sgn)
        idx = idx[np.argsort(np.abs(nodes[idx]))]
        hist = [(0.0, 0.0)]
        for i in idx:
            s = nodes[i]
            if len(hist) >= 2:
                (s1, u1), (s2, u2) = hist[-2], hist[-1]
                pred = u2 + (u2 - u1) / (s2 - s1) * (s - s2)
            else:
                pred = 0.0
            w = 0.25 * abs(s - hist[-1][0]) + 1e-3 * abs(s)
            for _ in range(6):
                lo, hi = pred - w, pred + w
                if h_at(s, lo) * h_at(s, hi) < 0:
                    break
                w *= 2
            else:
                raise NormalFormError(f"spade branch lost at s = {s:.4g}")
            u = brentq(lambda v: h_at(s, v), lo, hi, xtol=1e-16, rtol=4 * np.finfo(float).eps)
            u_nodes[i] = u
            hist.append((s, u))
    series = Chebyshev.fit(nodes, u_nodes, n_nodes - 1, domain=[-length, length])
    return GraphCurve(q, d, series, kind=kind, info={"spade_direction": d.tolist()})


def canonical_curve(ars: Ars, q, length=0.3, kind=None, **kw) -> ParamCurve:
    """The canonical parameterized transversal curve through q for its point kind."""
    q = np.asarray(q, float)
    pc = point_class(ars, q) if kind is None else None
    kind = kind or pc.kind
    if kind == "Degenerate":
        raise NormalFormError("degenerate point: no canonical curve")
    if kind == "RiemannianR1":
        return ODECurve(_level_field(ars), q, (-length, length), kind=kind)
    if kind == "Grushin":
        return ODECurve(_grushin_field(ars), q, (-length, length), kind=kind)
    if kind == "RiemannianR2":
        return _crest_curve(ars, q, length, **kw)
    if kind.startswith("Tangency"):
        return tangency_curve(ars, q, length=min(length, 0.15), kind=kind, **kw)
    raise KindMismatchError(kind)


def _crest_curve(ars, q, length, radius=None):
    cp = critical_point_class(ars, q)
    radius = radius or 1.5 * length
    curve = trace_crest(ars, q, cp.curve_direction, radius=radius)
    s = metric_arclength(ars, curve.points)
    i0 = int(np.argmin(np.hypot(*(curve.points - q).T)))
    s = s - s[i0]
    # keep a clean parameter range inside the traced piece
    sel = (s >= -length) & (s <= length)
    info = {"critical": cp.kind, "curve_kind": cp.curve_kind, "third_derivative": cp.third_derivative}
    return SplineCurve(s[sel], curve.points[sel], kind="RiemannianR2", info=info)


def tangency_curve(ars: Ars, q, length=0.15, kind=None, h=1e-3, n_nodes=33):
    """Canonical tangency curve: spade branch, orientation by the sign pairing of
    (f_xx, f_y) at the base point, then the parameter with |f~_xx(0, .)| = 2."""
    kind = kind or point_class(ars, q).kind
    base = spade_branch(ars, q, length=length, kind=kind)
    F = _stencil(ars, base, np.array([0.0]), h)
    fxx0 = _op2(F, 2, 0, h)[0]
    fy0 = _op2(F, 0, 1, h)[0]
    if np.sign(fxx0) == np.sign(fy0):
        base = Reversed(base)
    margin = 0.01 * length + 2 * h + 5e-4
    limit = length - margin
    eta = limit * np.polynomial.chebyshev.chebpts1(n_nodes)
    F = _stencil(ars, base, eta, h)
    fxx = np.abs(_op2(F, 2, 0, h))
    g = Chebyshev.fit(eta, fxx, n_nodes - 1, domain=[-limit, limit])
    rate = lambda e: 0.5 * float(g(e)) if np.ndim(e) == 0 else 0.5 * g(e)
    info = {"fxx_base": float(fxx0), "fy_base": float(fy0), "reversed": isinstance(base, Reversed),
            "lambda_base": abs(float(fy0))}
    return Reparam(base, rate, limit - 1e-9, kind=kind, info=info)


# --- Procedure 1 -----------------------------------------------------------------------

def _chart_values(ars, curve, xs, ys, **flow_opts):
    """f~, E and det DE on the lattice xs x ys."""
    try:
        E, DE = chart_map(ars, curve, xs, ys, **flow_opts)
    except FlowError as exc:
        raise TransversalityError(str(exc)) from exc
    det = DE[0, 0] * DE[1, 1] - DE[0, 1] * DE[1, 0]
    D = ars.det(E[0], E[1])
    return ars.orientation_E * D / det, E, det, DE


@dataclass
class ChartResult:
    ars: Ars
    curve: ParamCurve
    xbar: np.ndarray
    ybar: np.ndarray
    f_tilde: np.ndarray         # (nx, ny)
    E_points: np.ndarray        # (2, nx, ny)
    det_DE: np.ndarray          # (nx, ny)
    point_kind: PointClass
    base_point: tuple
    h: float = 1e-3
    diagnostics: dict = field(default_factory=dict)

    def evaluate(self, xs, ys):
        """(f~, E, det DE) at the lattice xs x ys."""
        f, E, det, _ = _chart_values(self.ars, self.curve, xs, ys)
        return f, E, det

    def to_json(self):
        return {
            "base_point": list(self.base_point),
            "kind": self.point_kind.kind,
            "grid": {"h": self.h, "nx": len(self.xbar), "ny": len(self.ybar),
                     "xbar": self.xbar.tolist(), "ybar": self.ybar.tolist()},
            "f_tilde": self.f_tilde.tolist(),
            "det_DE": self.det_DE.tolist(),
            "diagnostics": self.diagnostics,
        }


def _metric_coords(ars, pts, w):
    (a1, a2), (b1, b2) = ars.frame(pts[0], pts[1])
    D = a1 * b2 - a2 * b1
    return (w[0] * b2 - w[1] * b1) / D, (a1 * w[1] - a2 * w[0]) / D


def run_procedure1(ars: Ars, curve: ParamCurve, xbar, ybar, h=1e-3, base_point=None,
                   kind=None) -> ChartResult:
    """Chart E(xbar, ybar) = flow for time xbar of the transversal geodesic from
    curve(ybar), and the invariant f~ = eps_E det(F1, F2)(E) / det DE."""
    xbar = np.asarray(xbar, float)
    ybar = np.asarray(ybar, float)
    f, E, det, DE = _chart_values(ars, curve, xbar, ybar)
    if np.any(ars.orientation_M * det <= 0):
        raise ChartFoldError("det DE does not keep the orientation sign on the grid")
    q = tuple(float(v) for v in (curve.point(0.0)[:, 0] if base_point is None else base_point))
    pk = point_class(ars, q) if kind is None else PointClass(kind, {})
    diag = {"min_abs_det_DE": float(np.min(np.abs(det)))}
    D = ars.det(E[0], E[1])
    ok = np.abs(D) > 1e-6
    if ok.any():
        P = E[:, ok]
        X = DE[:, 0][:, ok]
        Yv = DE[:, 1][:, ok]
        x1, x2 = _metric_coords(ars, P, X)
        y1, y2 = _metric_coords(ars, P, Yv)
        diag["unit_X_err"] = float(np.max(np.abs(x1 ** 2 + x2 ** 2 - 1)))
        diag["orthogonality_err"] = float(np.max(np.abs(x1 * y1 + x2 * y2) / np.sqrt(y1 ** 2 + y2 ** 2)))
        diag["orthonormal"] = diag["unit_X_err"] <= 1e-6 and diag["orthogonality_err"] <= 1e-6
    return ChartResult(ars, curve, xbar, ybar, f, E, det, pk, q, h, diag)


def canonical_chart(ars: Ars, q, xbar, ybar, **kw) -> ChartResult:
    curve = canonical_curve(ars, q, **kw)
    return run_procedure1(ars, curve, xbar, ybar, base_point=tuple(q), kind=curve.kind)


# --- finite differences on a stencil around xbar = 0 ---------------------------------

_OFF = np.array([-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0])


def _stencil(ars, curve, ys, h, what="f"):
    """Values on {h * _OFF} x {ys_j + h * _OFF}: array (7, ny, 7)."""
    ys = np.atleast_1d(np.asarray(ys, float))
    yy = (ys[:, None] + h * _OFF[None, :]).ravel()
    f, E, det, _ = _chart_values(ars, curve, h * _OFF, yy)
    if what == "K":
        vals = gauss_curvature(ars, (E[0], E[1]))
    else:
        vals = f
    return vals.reshape(7, len(ys), 7)


def _op(F, order, h, axis):
    g = lambda k: np.take(F, k, axis=axis)
    if order == 0:
        return g(3)
    if order == 1:
        d1 = (g(5) - g(1)) / (2 * h)
        d2 = (g(4) - g(2)) / h
    elif order == 2:
        d1 = (g(5) - 2 * g(3) + g(1)) / h ** 2
        d2 = (g(4) - 2 * g(3) + g(2)) / (h / 2) ** 2
    elif order == 3:
        d1 = (g(6) - 2 * g(5) + 2 * g(1) - g(0)) / (2 * h ** 3)
        d2 = (g(5) - 2 * g(4) + 2 * g(2) - g(1)) / (2 * (h / 2) ** 3)
    else:
        raise ValueError("derivative order above 3")
    return (4 * d2 - d1) / 3


def _op2(F, i, j, h):
    """d^i/dx d^j/dy at (0, ys) from a (7, ny, 7) stencil, Richardson-extrapolated."""
    return _op(_op(F, i, h, 0), j, h, 1)


# --- condition suites ---------------------------------------------------------------

SUITES = {
    "G": ("Ga", "Gb"),
    "T": ("Ta", "Tb", "Tc", "Td", "Te"),
    "R1": ("R1a", "R1b", "R1c", "R1d", "R1e", "R1f"),
    "R2": ("R2a", "R2b", "R2c", "R2d", "R2e", "R2f"),
}

TOLERANCES = {
    "Ga": 1e-7, "Gb": 1e-5,
    "Ta": 1e-6, "Tb": 1e-5, "Tc": 1e-3, "Te": 1e-6,
    "R1a": 1e-6, "R1b": 1e-5, "R1d": 1e-7, "R1e": 1e-3,
    "R2a": 1e-6, "R2b": 1e-6,
}


@dataclass
class ConditionReport:
    suite: str
    residuals: dict
    passed: dict
    tolerances: dict
    details: dict = field(default_factory=dict)

    @property
    def ok(self):
        return all(self.passed.values())

    def to_json(self):
        clean = lambda v: None if v is None or (isinstance(v, float) and math.isnan(v)) else v
        return {"suite": self.suite, "residuals": {k: clean(v) for k, v in self.residuals.items()},
                "pass": self.passed, "tolerances": self.tolerances, "details": self.details}


def _suite_of(kind):
    if kind == "Grushin":
        return "G"
    if kind.startswith("Tangency"):
        return "T"
    if kind == "RiemannianR1":
        return "R1"
    if kind == "RiemannianR2":
        return "R2"
    raise KindMismatchError(f"no condition suite for kind {kind!r}")


def _spade_residual(ars, pts):
    """Distance-like residual |h| / |grad h| of the desingularized spade indicator."""
    fun = spade_value_grad(ars)
    out = []
    for p in pts.T:
        v, g = fun(p)
        out.append(abs(v) / max(np.hypot(*g), 1e-300))
    return np.array(out)


def verify_conditions(chart: ChartResult, ys=None, h=None, kind=None) -> ConditionReport:
    """Evaluate the condition suite matching the chart's point kind.

    Derivatives of f~ are Richardson-extrapolated central differences with step
    h (default chart.h) for orders up to 2 and 10 h for third-order ones.
    """
    kind = kind or chart.point_kind.kind
    suite = _suite_of(kind)
    if kind != chart.point_kind.kind:
        raise KindMismatchError(f"chart kind {chart.point_kind.kind} does not match {kind}")
    h = h or chart.h
    if ys is None:
        lo, hi = chart.curve.span
        lim = 0.8 * min(-lo, hi, np.max(np.abs(chart.ybar)))
        ys = np.linspace(-lim, lim, 9)
    ys = np.asarray(ys, float)
    ars, curve = chart.ars, chart.curve
    i0 = int(np.argmin(np.abs(ys)))
    res, ok = {}, {}
    details = {"ys": ys.tolist(), "h": h}
    tol = {k: TOLERANCES.get(k) for k in SUITES[suite]}
    F = _stencil(ars, curve, ys, h)
    f0 = _op2(F, 0, 0, h)
    fx = _op2(F, 1, 0, h)

    def bound(name, value):
        res[name] = float(value)
        ok[name] = bool(value <= tol[name])

    if suite == "G":
        bound("Ga", np.max(np.abs(f0)))
        bound("Gb", np.max(np.abs(fx - 1)))
    elif suite == "T":
        fxx = _op2(F, 2, 0, h)
        fy = _op2(F, 0, 1, h)
        target = -2.0 if kind == "TangencyPlus" else 2.0
        bound("Ta", abs(f0[i0]))
        bound("Tb", abs(fx[i0]))
        bound("Tc", np.max(np.abs(fxx - target)))
        want = 1.0 if kind == "TangencyPlus" else -1.0
        res["Td"] = float(fy[i0])
        ok["Td"] = bool(np.sign(fy[i0]) == want)
        tol["Td"] = "sign"
        nz = np.abs(ys) > 1e-12
        bound("Te", np.max(_spade_residual(ars, curve.point(ys[nz]))))
        details["fxx"] = fxx.tolist()
        details["lambda"] = abs(float(fy[i0]))
    else:
        sign = float(np.sign(f0[i0]))
        KF = _stencil(ars, curve, ys, h, what="K")
        Kx = _op2(KF, 1, 0, h)
        Ky = _op2(KF, 0, 1, h)
        if suite == "R1":
            phi = np.log(np.abs(F))
            H = 10 * h
            PH = np.log(np.abs(_stencil(ars, curve, ys, H)))
            px, pxx = _op2(phi, 1, 0, h), _op2(phi, 2, 0, h)
            pxy = _op2(phi, 1, 1, h)
            pxxy = _op2(PH, 2, 1, H)
            pxxx = _op2(PH, 3, 0, H)
            bound("R1a", np.max(np.abs(f0 - sign)))
            bound("R1b", np.max(np.abs(Ky)))
            res["R1c"] = float(np.min(Kx))
            ok["R1c"] = bool(np.min(Kx) > 0)
            tol["R1c"] = "> 0"
            bound("R1d", np.max(np.abs(_op2(phi, 0, 0, h))))
            bound("R1e", np.max(np.abs(-2 * pxx * pxy + pxxy)))
            r1f = pxxx - 2 * px * pxx
            res["R1f"] = float(np.min(r1f))
            ok["R1f"] = bool(np.min(r1f) > 0)
            tol["R1f"] = "> 0"
        else:
            bound("R2a", np.max(np.abs(f0 - sign)))
            nz = np.abs(ys) > 1e-12
            bound("R2b", np.max(_spade_residual(ars, curve.point(ys[nz]))))
            K0 = _stencil(ars, curve, np.array([0.0]), h, what="K")
            kxx, kyy = _op2(K0, 2, 0, h)[0], _op2(K0, 0, 2, h)[0]
            K3 = _stencil(ars, curve, np.array([0.0]), 10 * h, what="K")
            kyyy = _op2(K3, 0, 3, 10 * h)[0]
            crit = curve.info.get("critical")
            details.update({"Kxx": float(kxx), "Kyy": float(kyy), "Kyyy": float(kyyy), "critical": crit})
            checks = {"R2c": ("max", 0 > kyy > kxx), "R2d": ("min", 0 < kyy < kxx),
                      "R2e": ("saddle", kyy > 0 > kxx)}
            for name, (ck, cond) in checks.items():
                applies = crit == ck
                res[name] = float(kyy - kxx) if applies else float("nan")
                ok[name] = bool(cond) if applies else True
                tol[name] = "inequality chain" if applies else "n/a"
            res["R2f"] = float(kyyy)
            ok["R2f"] = bool(kyyy > 0)
            tol["R2f"] = "> 0"
    return ConditionReport(suite, res, ok, tol, details)


# --- change of coordinates ------------------------------------------------------------

def transform_structure(ars: Ars, psi_x, psi_y) -> Ars:
    """The structure on a new chart u for which u -> Psi(u) = (psi_x, psi_y) is an
    isometry onto ``ars``: F~_i(u) = DPsi(u)^-1 F_i(Psi(u)).

    Psi must be orientation preserving on the window; the result is a general frame.
    """
    px, py = as_field(psi_x), as_field(psi_y)
    j11, j12 = diff(px, "x"), diff(px, "y")
    j21, j22 = diff(py, "x"), diff(py, "y")
    t = lambda e: f"({e})"
    det = f"({t(j11)}*{t(j22)} - {t(j12)}*{t(j21)})"
    comps = []
    for c1, c2 in (ars.F1, ars.F2):
        s1 = str(c1.substitute(x=px, y=py))
        s2 = str(c2.substitute(x=px, y=py))
        n1 = f"({t(j22)}*{t(s1)} - {t(j12)}*{t(s2)})/{det}"
        n2 = f"({t(j11)}*{t(s2)} - {t(j21)}*{t(s1)})/{det}"
        comps += [parse_field(n1), parse_field(n2)]
    return Ars.from_frame(*comps, orientation_M=ars.orientation_M, orientation_E=ars.orientation_E,
                          domain=ars.domain, tol=ars.tol)


def invert_point(psi_x, psi_y, target, guess=(0.0, 0.0), tol=1e-14, maxit=50):
    """Solve Psi(u) = target by Newton."""
    px, py = as_field(psi_x), as_field(psi_y)
    J = [[diff(px, "x"), diff(px, "y")], [diff(py, "x"), diff(py, "y")]]
    u = np.array(guess, float)
    for _ in range(maxit):
        r = np.array([px(*u), py(*u)]) - np.asarray(target, float)
        M = np.array([[J[i][k](*u) for k in range(2)] for i in range(2)])
        step = np.linalg.solve(M, r)
        u = u - step
        if np.max(np.abs(step)) <= tol:
            break
    return u
