"""Almost-Riemannian structures on a planar chart, point classification and
the singular set."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import expr
from ._tracer import Curve, TraceError, newton_to_zero, trace_zero_set
from .expr import FieldExpr, as_field, taylor_jets

KINDS = ("RiemannianR1", "RiemannianR2", "Grushin", "TangencyPlus", "TangencyMinus", "Degenerate")


@dataclass(frozen=True)
class Tol:
    """Classification tolerances.

    ``det`` is the zero threshold for the frame determinants after normalizing
    by the local frame magnitude, ``grad`` the threshold on the curvature
    gradient norm, ``rotation`` the minimal rotation rate of the distribution
    along Z at a tangency point.
    """

    det: float = 1e-9
    grad: float = 1e-9
    rotation: float = 1e-9

    def scaled(self, factor):
        return Tol(self.det * factor, self.grad * factor, self.rotation * factor)


@dataclass(frozen=True)
class Ars:
    """An oriented frame pair (F1, F2) on a box in the plane.

    F1 = (a1, a2), F2 = (b1, b2). In f-chart form F1 = (1, 0), F2 = (0, f).
    """

    F1: tuple
    F2: tuple
    chart_form: bool = False
    orientation_M: int = 1
    orientation_E: int = 1
    domain: tuple = (-1.0, 1.0, -1.0, 1.0)
    tol: Tol = field(default_factory=Tol)

    def __post_init__(self):
        if self.orientation_M not in (1, -1) or self.orientation_E not in (1, -1):
            raise ValueError("orientations must be +1 or -1")
        x0, x1, y0, y1 = self.domain
        if not (x0 < x1 and y0 < y1):
            raise ValueError("domain box is degenerate")
        if self.chart_form:
            a1, a2, b1 = (self.F1[0], self.F1[1], self.F2[0])
            if not (a1.ast == expr.Const(1.0) and a2.ast == expr.Const(0.0) and b1.ast == expr.Const(0.0)):
                raise ValueError("f-chart requires F1 = (1, 0) and F2 = (0, f)")

    @classmethod
    def f_chart(cls, f, **kw) -> "Ars":
        one, zero = as_field("1"), as_field("0")
        return cls((one, zero), (zero, as_field(f)), chart_form=True, **kw)

    @classmethod
    def from_frame(cls, a1, a2, b1, b2, **kw) -> "Ars":
        return cls((as_field(a1), as_field(a2)), (as_field(b1), as_field(b2)), **kw)

    @property
    def f(self) -> FieldExpr:
        if not self.chart_form:
            raise AttributeError("not an f-chart structure")
        return self.F2[1]

    @property
    def fields(self):
        return (self.F1[0], self.F1[1], self.F2[0], self.F2[1])

    def with_orientation(self, orientation_M=None, orientation_E=None) -> "Ars":
        return replace(self, orientation_M=self.orientation_M if orientation_M is None else orientation_M,
                       orientation_E=self.orientation_E if orientation_E is None else orientation_E)

    def with_tol(self, tol: Tol) -> "Ars":
        return replace(self, tol=tol)

    def frame_jets(self, x, y, order):
        """Jets of (a1, a2, b1, b2) at the given center(s)."""
        return taylor_jets(self.fields, (x, y), order)

    def frame(self, x, y):
        """Frame components as an array of shape (2, 2, *batch): [i][k] = F_i^k."""
        a1, a2, b1, b2 = (j.value for j in self.frame_jets(x, y, 0))
        return np.array([[a1, a2], [b1, b2]])

    def det(self, x, y):
        """det(F1, F2) in chart coordinates."""
        (a1, a2), (b1, b2) = self.frame(x, y)
        return a1 * b2 - a2 * b1

    def det_jet(self, x, y, order):
        a1, a2, b1, b2 = self.frame_jets(x, y, order)
        return a1 * b2 - a2 * b1

    def minus_side(self, x, y):
        """True where the frame reverses the orientation of the chart (M minus)."""
        return np.sign(self.det(x, y)) * self.orientation_E * self.orientation_M < 0


def bracket(F, G):
    """Lie bracket [F, G] = DG F - DF G of jet vector fields (order drops by one)."""
    return tuple(F[0] * G[k].dx() + F[1] * G[k].dy() - G[0] * F[k].dx() - G[1] * F[k].dy()
                 for k in range(2))


def _det2(u, v):
    return u[0] * v[1] - u[1] * v[0]


@dataclass(frozen=True)
class PointClass:
    kind: str
    witnesses: dict

    @property
    def is_tangency(self):
        return self.kind.startswith("Tangency")

    @property
    def is_riemannian(self):
        return self.kind.startswith("Riemannian")


def determinant_witnesses(ars: Ars, q):
    """Normalized determinant tests at q.

    D0 = det(F1, F2), D1 = max |det(F_i, [F1, F2])|, D2 = max |det(F_i, [F_j, [F1, F2]])|,
    each divided by the matching power of s = |F1|^2 + |F2|^2.
    """
    x, y = float(q[0]), float(q[1])
    a1, a2, b1, b2 = ars.frame_jets(x, y, 2)
    F1, F2 = (a1, a2), (b1, b2)
    B = bracket(F1, F2)
    F1b, F2b = (a1.truncate(1), a2.truncate(1)), (b1.truncate(1), b2.truncate(1))
    BB1, BB2 = bracket(F1b, B), bracket(F2b, B)
    v = lambda j: float(j.value)
    f1 = np.array([v(a1), v(a2)])
    f2 = np.array([v(b1), v(b2)])
    b = np.array([v(B[0]), v(B[1])])
    bb1 = np.array([v(BB1[0]), v(BB1[1])])
    bb2 = np.array([v(BB2[0]), v(BB2[1])])
    s = f1 @ f1 + f2 @ f2
    if s == 0:
        return {"D0": 0.0, "D1": 0.0, "D2": 0.0, "frame_norm2": 0.0,
                "bracket": b.tolist(), "det": 0.0}
    D0 = _det2(f1, f2)
    D1 = max(abs(_det2(f1, b)), abs(_det2(f2, b)))
    D2 = max(abs(_det2(u, w)) for u in (f1, f2) for w in (bb1, bb2))
    return {"det": D0, "D0": abs(D0) / s, "D1": D1 / s, "D2": D2 / s, "frame_norm2": s,
            "bracket": b.tolist()}


def point_class(ars: Ars, q) -> PointClass:
    """Classify q as R1, R2, Grushin, Tangency(+/-) or Degenerate."""
    w = determinant_witnesses(ars, q)
    tol = ars.tol.det
    if w["D0"] > tol:
        from .curvature import grad_K

        _, A = grad_K(ars, q)
        w["A"] = float(A)
        w["grad_norm"] = float(np.sqrt(A))
        if np.sqrt(A) > ars.tol.grad:
            return PointClass("RiemannianR1", w)
        w["HA_degenerate"] = _hessian_degenerate(ars, q)
        return PointClass("RiemannianR2", w)
    if w["D1"] > tol:
        return PointClass("Grushin", w)
    if w["D2"] > tol:
        try:
            kind, rate = _rotation_sign(ars, q)
        except TangencyError as exc:
            w["rotation_error"] = str(exc)
            return PointClass("Degenerate", w)
        w["rotation_rate"] = rate
        return PointClass(kind, w)
    return PointClass("Degenerate", w)


def _hessian_degenerate(ars, q):
    from .curvature import curvature_hessian

    H = curvature_hessian(ars, q)
    ev = np.linalg.eigvalsh(H)
    return bool(abs(ev[1] - ev[0]) <= 1e-6 or np.min(np.abs(ev)) <= 1e-6)


def f_chart_class(f, q, tol=1e-9):
    """Sign tests on f alone: returns 'Riemannian', 'Grushin', 'Tangency' or 'Degenerate'.

    Uses the same normalization as the bracket path: with F1 = (1,0), F2 = (0,f)
    one has s = 1 + f^2, det = f, [F1,F2] = (0, f_x), [F1,[F1,F2]] = (0, f_xx).
    """
    j = expr.taylor_jet(as_field(f), q, 2)
    f0, fx, fxx, fy = (float(j.coeff(0, 0)), float(j.coeff(1, 0)), 2 * float(j.coeff(2, 0)),
                       float(j.coeff(0, 1)))
    s = 1 + f0 * f0
    if abs(f0) / s > tol:
        return "Riemannian"
    if abs(fx) / s > tol:
        return "Grushin"
    # [F2,[F1,F2]] = (0, f f_xy - f_x f_y), which vanishes here since f = f_x = 0
    if abs(fxx) / s > tol:
        return "Tangency"
    return "Degenerate"


# --- singular set -----------------------------------------------------------

def _det_fun(ars):
    def fun(p):
        j = ars.det_jet(p[0], p[1], 1)
        return float(j.value), np.array([float(j.coeff(1, 0)), float(j.coeff(0, 1))])
    return fun


def _delta_direction(ars, x, y):
    """A nonzero vector spanning the distribution at a point of Z."""
    (a1, a2), (b1, b2) = ars.frame(x, y)
    if a1 * a1 + a2 * a2 >= b1 * b1 + b2 * b2:
        return np.array([a1, a2], float)
    return np.array([b1, b2], float)


def trace_singular_set(ars: Ars, seed, h0=2e-3, **kw) -> Curve:
    """Trace Z = {det(F1, F2) = 0} through ``seed`` and mark tangency points.

    The curve is oriented as the boundary of M minus (outward normal pointing
    to M plus). Tangency points, where the distribution is tangent to Z, are
    returned in ``curve.markers`` with kind 'tangency'.
    """
    fun = _det_fun(ars)
    v, g = fun(np.asarray(seed, float))
    p, ok = newton_to_zero(fun, seed, 1e-11, maxit=1)
    v, g = fun(p)
    if abs(v) > ars.tol.det * max(1.0, np.hypot(*g)) * 1e3:
        raise TraceError(f"seed {tuple(seed)} is not on the singular set")
    # boundary orientation of M minus: det_M(n_out, tau) > 0 with n_out along
    # the gradient of eps_E * eps_M * det
    sgn = ars.orientation_E * ars.orientation_M
    n_out = sgn * g
    tau = ars.orientation_M * np.array([-n_out[1], n_out[0]])
    curve = trace_zero_set(fun, p, ars.domain, h0=h0, orient=tau, **kw)
    curve.markers.extend(_tangency_markers(ars, curve))
    return curve


def _tangency_markers(ars, curve):
    fun = _det_fun(ars)
    vals = []
    ref = None
    for (x, y) in curve.points:
        d = _delta_direction(ars, x, y)
        if ref is not None and d @ ref < 0:
            d = -d
        ref = d
        _, g = fun((x, y))
        vals.append(g @ d / (np.hypot(*g) * np.hypot(*d)))
    vals = np.array(vals)
    out = []
    for i in np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0):
        q0 = 0.5 * (curve.points[i] + curve.points[i + 1])
        try:
            q = polish_tangency(ars, q0)
        except TangencyError:
            continue
        if all(np.hypot(*(np.array(m["point"]) - q)) > 1e-8 for m in out):
            out.append({"kind": "tangency", "point": tuple(q)})
    return out


class TangencyError(RuntimeError):
    pass


def polish_tangency(ars: Ars, q0, tol=1e-12, maxit=40):
    """Newton on (det, derivative of det along the distribution) = 0."""
    q = np.array(q0, float)
    d_ref = _delta_direction(ars, *q)

    def G(p):
        j = ars.det_jet(p[0], p[1], 2)
        d = _delta_direction(ars, *p)
        if d @ d_ref < 0:
            d = -d
        gx, gy = float(j.coeff(1, 0)), float(j.coeff(0, 1))
        return np.array([float(j.value), gx * d[0] + gy * d[1]])

    for _ in range(maxit):
        r = G(q)
        h = 1e-7
        J = np.column_stack([(G(q + [h, 0]) - G(q - [h, 0])) / (2 * h),
                             (G(q + [0, h]) - G(q - [0, h])) / (2 * h)])
        try:
            dq = np.linalg.solve(J, r)
        except np.linalg.LinAlgError as exc:
            raise TangencyError("singular Jacobian while polishing tangency") from exc
        q = q - dq
        if np.hypot(*dq) < tol:
            return q
    if np.max(np.abs(G(q))) < 1e-10:
        return q
    raise TangencyError("tangency polishing did not converge")


def _z_tangent(ars, p):
    """Unit tangent of Z at p oriented as the boundary of M minus."""
    j = ars.det_jet(p[0], p[1], 1)
    g = np.array([float(j.coeff(1, 0)), float(j.coeff(0, 1))])
    n_out = ars.orientation_E * ars.orientation_M * g
    tau = ars.orientation_M * np.array([-n_out[1], n_out[0]])
    norm = np.hypot(*tau)
    if not norm > 0:
        raise TangencyError("Z is not a regular curve here (gradient of det vanishes)")
    return tau / norm


def _angle_to_delta(ars, p):
    tau = _z_tangent(ars, p)
    d = _delta_direction(ars, *p)
    cross = ars.orientation_M * (tau[0] * d[1] - tau[1] * d[0])
    dot = tau @ d
    # angle mod pi, taken near 0 since Delta is nearly tangent here
    return np.arctan(cross / dot) if dot != 0 else np.pi / 2


def _rotation_sign(ars, q, h=1e-4):
    fun = _det_fun(ars)
    q = np.asarray(q, float)
    tau = _z_tangent(ars, q)
    rates = []
    for step in (h, h / 2):
        ends = []
        for sgn in (1, -1):
            p, ok = newton_to_zero(fun, q + sgn * step * tau)
            if not ok:
                raise TangencyError("could not follow Z near the tangency point")
            ends.append(p)
        ds = np.hypot(*(ends[0] - q)) + np.hypot(*(ends[1] - q))
        rates.append((_angle_to_delta(ars, ends[0]) - _angle_to_delta(ars, ends[1])) / ds)
    rate = rates[1]
    if abs(rate) <= ars.tol.rotation or np.sign(rates[0]) != np.sign(rates[1]):
        raise TangencyError(f"ambiguous rotation of the distribution along Z (rate {rate:.3g})")
    return ("TangencyPlus" if rate > 0 else "TangencyMinus"), float(rate)


def tangency_type(ars: Ars, q) -> str:
    """TangencyPlus if the distribution rotates positively along Z at q."""
    w = determinant_witnesses(ars, q)
    if not (w["D0"] <= ars.tol.det and w["D1"] <= ars.tol.det and w["D2"] > ars.tol.det):
        raise TangencyError(f"point {tuple(q)} is not a tangency point")
    return _rotation_sign(ars, q)[0]
