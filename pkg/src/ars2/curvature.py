"""Gaussian curvature, its gradient, the spade indicator and critical points of K.

Everything is computed from Taylor jets of the frame. In the f-chart the
desingularized spade indicator h = S * f^8 is evaluated through a
division-free polynomial identity, so it stays accurate across Z.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._tracer import Curve, TraceError, trace_zero_set
from .expr import Jet2, reciprocal, taylor_jet
from .frames import Ars, bracket


class NearSingularSetError(ValueError):
    pass


class GenericityError(RuntimeError):
    """A genericity hypothesis (HA, HB) fails numerically."""


def _xy(q):
    return np.asarray(q[0], float), np.asarray(q[1], float)


def _check_off_z(ars, D, s=None):
    if s is None:
        s = 1.0
    bad = np.abs(D) / s <= ars.tol.det
    if np.any(bad):
        raise NearSingularSetError("point on or too close to the singular set")


def _jd(j):
    """(d/dx, d/dy) of a jet."""
    return j.dx(), j.dy()


def curvature_parts(ars: Ars, x, y, order):
    """Jets (P, D) with K = P / D^2, both of the given order.

    In the f-chart P = f f_xx - 2 f_x^2 and D = f. For a general frame,
    with [F1,F2] = (b1 F1 + b2 F2)/D, P = D F1(b2) - b2 F1(D) - D F2(b1) + b1 F2(D) - b1^2 - b2^2,
    which is the Cartan formula K = F1(c2) - F2(c1) - c1^2 - c2^2 with c_i = b_i / D.
    """
    n = order
    if ars.chart_form:
        f = taylor_jet(ars.f, (x, y), n + 2)
        fx = f.dx()
        fxx = fx.dx()
        f0, fx1 = f.truncate(n), fx.truncate(n)
        return f0 * fxx - 2.0 * fx1 * fx1, f0
    a1, a2, b1, b2 = ars.frame_jets(x, y, n + 2)
    D = a1 * b2 - a2 * b1
    B = bracket((a1, a2), (b1, b2))
    t = lambda j: j.truncate(n + 1)
    a1t, a2t, b1t, b2t, Dt = t(a1), t(a2), t(b1), t(b2), t(D)
    beta1 = B[0] * b2t - B[1] * b1t
    beta2 = a1t * B[1] - a2t * B[0]
    s = lambda j: j.truncate(n)
    e1 = lambda j: s(a1t) * j.dx() + s(a2t) * j.dy()
    e2 = lambda j: s(b1t) * j.dx() + s(b2t) * j.dy()
    P = (s(Dt) * e1(beta2) - s(beta2) * e1(Dt) - s(Dt) * e2(beta1) + s(beta1) * e2(Dt)
         - s(beta1) * s(beta1) - s(beta2) * s(beta2))
    return P, s(Dt)


def curvature_jet(ars: Ars, x, y, order) -> Jet2:
    P, D = curvature_parts(ars, x, y, order)
    return P * reciprocal(D * D)


def gauss_curvature(ars: Ars, q):
    """Gaussian curvature at q (vectorized over arrays of points)."""
    x, y = _xy(q)
    P, D = curvature_parts(ars, x, y, 0)
    _check_off_z(ars, D.value, _frame_scale(ars, x, y))
    return _out(P.value / D.value ** 2)


def _frame_scale(ars, x, y):
    (a1, a2), (b1, b2) = ars.frame(x, y)
    return a1 * a1 + a2 * a2 + b1 * b1 + b2 * b2


def _out(v):
    return v if np.ndim(v) else float(v)


def _frame_derivs(ars, x, y, order):
    """Frame jets truncated to ``order`` and a function applying e1, e2 to jets."""
    a1, a2, b1, b2 = (j for j in ars.frame_jets(x, y, order))
    return a1, a2, b1, b2


def grad_K(ars: Ars, q):
    """Almost-Riemannian gradient of K and A = |grad K|^2.

    Returns (vector of shape (2, *batch), A).
    """
    x, y = _xy(q)
    K = curvature_jet(ars, x, y, 1)
    _check_off_z(ars, ars.det(x, y), _frame_scale(ars, x, y))
    (a1, a2), (b1, b2) = ars.frame(x, y)
    Kx, Ky = K.coeff(1, 0), K.coeff(0, 1)
    e1K = a1 * Kx + a2 * Ky
    e2K = b1 * Kx + b2 * Ky
    vec = np.array([e1K * a1 + e2K * b1, e1K * a2 + e2K * b2])
    return vec, _out(e1K ** 2 + e2K ** 2)


def _spade_fchart_jet(f, order):
    """Jet of M = S f^8 for the f-chart, from a jet of f of order ``order + 4``."""
    fx, fy = _jd(f)
    fxx = fx.dx()
    n = order
    T = lambda j, k: j.truncate(k)
    P = T(f, n + 2) * fxx - 2.0 * T(fx, n + 2) * T(fx, n + 2)          # order n+2
    Px, Py = _jd(P)                                                        # n+1
    f1, fx1, fy1, P1 = T(f, n + 1), T(fx, n + 1), T(fy, n + 1), T(P, n + 1)
    Q1 = f1 * Px - 2.0 * P1 * fx1
    Q2 = f1 * Py - 2.0 * P1 * fy1
    R = Q1 * Q1 + f1 * f1 * Q2 * Q2                                        # n+1
    Rx, Ry = _jd(R)                                                        # n
    return (Ry * T(Q1, n) - Rx * T(Q2, n)
            - 6.0 * T(R, n) * (T(fy1, n) * T(Px, n) - T(fx1, n) * T(Py, n)))


def spade_jet(ars: Ars, x, y, order=0) -> Jet2:
    """Jet of the desingularized spade indicator h = S * D^8."""
    if ars.chart_form:
        return _spade_fchart_jet(taylor_jet(ars.f, (x, y), order + 4), order)
    S, D = _spade_raw_jet(ars, x, y, order)
    return S * D ** 8


def _spade_raw_jet(ars, x, y, order):
    n = order
    K = curvature_jet(ars, x, y, n + 2)
    a1, a2, b1, b2 = ars.frame_jets(x, y, n + 1)
    Kx, Ky = _jd(K)
    e1K = a1 * Kx + a2 * Ky
    e2K = b1 * Kx + b2 * Ky
    A = e1K * e1K + e2K * e2K
    Ax, Ay = _jd(A)
    t = lambda j: j.truncate(n)
    e1A = t(a1) * Ax + t(a2) * Ay
    e2A = t(b1) * Ax + t(b2) * Ay
    S = e2A * t(e1K) - e1A * t(e2K)
    D = t(a1) * t(b2) - t(a2) * t(b1)
    return S, D


def spade_indicator(ars: Ars, q):
    """Return (raw S, desingularized h = S * D^8) at q.

    S = (e2 A)(e1 K) - (e1 A)(e2 K) = G(grad A, rot90 grad K). The raw value is
    NaN on Z, where it is undefined.
    """
    x, y = _xy(q)
    if ars.chart_form:
        M = spade_jet(ars, x, y, 0).value
        D = ars.det(x, y)
        with np.errstate(divide="ignore", invalid="ignore"):
            raw = np.where(D != 0, M / D ** 8, np.nan)
        return _out(raw), _out(M)
    from .expr import domain_policy

    with domain_policy("nan"), np.errstate(all="ignore"):
        S, D = _spade_raw_jet(ars, x, y, 0)
    raw = S.value
    return _out(raw), _out(raw * D.value ** 8)


def spade_value_grad(ars: Ars):
    """Callable p -> (h(p), grad h(p)) for the zero-set tracer."""
    def fun(p):
        j = spade_jet(ars, p[0], p[1], 1)
        return float(j.value), np.array([float(j.coeff(1, 0)), float(j.coeff(0, 1))])
    return fun


def level_value_grad(ars: Ars, level):
    def fun(p):
        j = curvature_jet(ars, p[0], p[1], 1)
        return float(j.value) - level, np.array([float(j.coeff(1, 0)), float(j.coeff(0, 1))])
    return fun


def trace_level_set(ars: Ars, q, box=None, **kw) -> Curve:
    """Trace the K-level set through q."""
    level = gauss_curvature(ars, q)
    return trace_zero_set(level_value_grad(ars, level), q, box or ars.domain, **kw)


# --- critical points ---------------------------------------------------------

def curvature_hessian(ars: Ars, q):
    """Hessian of K in the orthonormal frame, [e_i e_j K] at q.

    At a critical point this is the covariant Hessian, since the connection
    terms multiply dK = 0.
    """
    x, y = float(q[0]), float(q[1])
    K = curvature_jet(ars, x, y, 2)
    Hc = np.array([[2 * K.coeff(2, 0), K.coeff(1, 1)], [K.coeff(1, 1), 2 * K.coeff(0, 2)]], float)
    F = ars.frame(x, y).T  # columns F1, F2
    return F.T @ Hc @ F


def _third_directional(ars, q, v):
    """d^3/dt^3 K(q + t v) at t = 0 (straight chart line)."""
    K = curvature_jet(ars, float(q[0]), float(q[1]), 3)
    c = lambda i, j: float(K.coeff(i, j))
    vx, vy = v
    return 6 * (c(3, 0) * vx ** 3 + c(2, 1) * vx ** 2 * vy + c(1, 2) * vx * vy ** 2 + c(0, 3) * vy ** 3)


@dataclass(frozen=True)
class CriticalPoint:
    kind: str                 # 'max', 'min' or 'saddle'
    eigenvalues: tuple        # ascending, in the orthonormal frame
    directions: tuple         # unit chart vectors (for g) of the eigendirections
    curve_direction: np.ndarray
    curve_kind: str           # 'crest' or 'valley'
    third_derivative: float
    flags: dict


def critical_point_class(ars: Ars, q, gap_tol=1e-6, third_tol=1e-8) -> CriticalPoint:
    """Type of a critical point of K and the crest/valley that carries the canonical curve.

    max -> crest along the larger eigenvalue, min -> valley along the smaller
    one, saddle -> crest along the positive eigenvalue. The direction is
    oriented so that the third derivative of K along the canonical curve is positive.
    """
    vec, A = grad_K(ars, q)
    if np.sqrt(A) > ars.tol.grad * 1e3:
        raise GenericityError(f"grad K does not vanish at {tuple(q)} (|grad K| = {np.sqrt(A):.3g})")
    H = curvature_hessian(ars, q)
    ev, W = np.linalg.eigh(H)
    flags = {"HA": True, "HB": True}
    if abs(ev[1] - ev[0]) <= gap_tol or np.min(np.abs(ev)) <= gap_tol:
        flags["HA"] = False
        raise GenericityError("HA violated: Hessian of K is degenerate or has a repeated eigenvalue")
    if ev[0] > 0:
        kind, pick, ck = "min", 0, "valley"
    elif ev[1] < 0:
        kind, pick, ck = "max", 1, "crest"
    else:
        kind, pick, ck = "saddle", 1, "crest"
    F = ars.frame(float(q[0]), float(q[1])).T
    dirs = tuple(F @ W[:, k] for k in range(2))
    v = dirs[pick]
    third = _crest_third_derivative(ars, q, v)
    if abs(third) <= third_tol:
        flags["HB"] = False
        raise GenericityError("HB violated: third derivative of K along the crest/valley vanishes")
    if third < 0:
        v, third = -v, -third
    return CriticalPoint(kind, tuple(ev), dirs, v, ck, float(third), flags)


def _crest_third_derivative(ars, q, v, delta=2e-2):
    """Third arclength derivative of K along the spade branch leaving q along v."""
    try:
        curve = trace_crest(ars, q, v, radius=delta)
    except TraceError:
        return _third_directional(ars, q, v)
    s = metric_arclength(ars, curve.points)
    s -= np.interp(0.0, curve.params, s)
    K = gauss_curvature(ars, (curve.points[:, 0], curve.points[:, 1]))
    sel = np.abs(s) <= delta
    coef = np.polynomial.polynomial.polyfit(s[sel], K[sel] - gauss_curvature(ars, q), 6)
    return 6.0 * coef[3]


def metric_arclength(ars, pts):
    """Cumulative length of a polyline measured with the almost-Riemannian metric (off Z)."""
    mid = 0.5 * (pts[1:] + pts[:-1])
    d = np.diff(pts, axis=0)
    F = ars.frame(mid[:, 0], mid[:, 1])  # (2, 2, n)
    # velocity = u1 F1 + u2 F2 ; length = |u|
    a1, a2, b1, b2 = F[0, 0], F[0, 1], F[1, 0], F[1, 1]
    D = a1 * b2 - a2 * b1
    u1 = (d[:, 0] * b2 - d[:, 1] * b1) / D
    u2 = (a1 * d[:, 1] - a2 * d[:, 0]) / D
    return np.r_[0.0, np.cumsum(np.hypot(u1, u2))]


def trace_crest(ars: Ars, q, v, radius=0.2, h0=1e-3) -> Curve:
    """The spade branch through the critical point q with tangent v, as one curve.

    Both halves are traced outward from seeds q +- delta v, since the spade set
    crosses itself at q.
    """
    q = np.asarray(q, float)
    v = np.asarray(v, float) / np.hypot(*v)
    fun = spade_value_grad(ars)
    box = (q[0] - radius, q[0] + radius, q[1] - radius, q[1] + radius)
    halves = []
    for sgn in (1, -1):
        seed = q + sgn * 5 * h0 * v
        c = trace_zero_set(fun, seed, box, h0=h0, hmax=2e-3, orient=sgn * v, directions=(1.0,))
        halves.append(c)
    fwd, back = halves
    pts = np.vstack([back.points[::-1], q[None], fwd.points])
    tans = np.vstack([-back.tangents[::-1], v[None], fwd.tangents])
    s = np.r_[0.0, np.cumsum(np.hypot(*np.diff(pts, axis=0).T))]
    s -= s[len(back.points)]
    return Curve(s, pts, tans)
