"""Fronts of geodesics launched from Z or from a point, their first simultaneous
crossings (cut points), conjugate-time checks and asymptotic fits."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .frames import Ars
from .geodesics import (FlowError, flow_batch, hamiltonian, hamiltonian_vector_field,
                        transversal_covectors, z_covectors)
from .jets import K as ELLIPTIC_K


class CutSearchError(RuntimeError):
    pass


class FitError(ValueError):
    pass


# --- sources ---------------------------------------------------------------------

@dataclass(frozen=True)
class ZSource:
    """Z written as a graph near a point, launch parameter a = the graph variable.

    along='x' means Z = {y = y_Z(x)} and a = x; along='y' means Z = {x = x_Z(y)}
    and a = y.
    """

    ars: Ars
    guess: float = 0.0
    along: str = "x"

    def points(self, a):
        a = np.atleast_1d(np.asarray(a, float))
        u = np.full_like(a, self.guess)
        free, fixed = ((0, 1), (1, 0)) if self.along == "x" else ((1, 0), (0, 1))
        xy = (lambda u: (a, u)) if self.along == "x" else (lambda u: (u, a))
        for _ in range(60):
            j = self.ars.det_jet(*xy(u), 1)
            step = j.value / j.coeff(*free)
            u = u - step
            if np.max(np.abs(step)) <= 1e-16 * max(1.0, np.max(np.abs(u))):
                break
        j = self.ars.det_jet(*xy(u), 1)
        slope = -j.coeff(*fixed) / j.coeff(*free)
        one = np.ones_like(a)
        if self.along == "x":
            return np.array([a, u]), np.array([one, slope])
        return np.array([u, a]), np.array([slope, one])

    def launch(self, a, side):
        pts, tan = self.points(a)
        return z_covectors(self.ars, pts, tan, side)

    def launch_derivative(self, a, side, rel=1e-3):
        """d z0 / d a by a fourth-order central difference with step rel*|a|."""
        a = np.atleast_1d(np.asarray(a, float))
        h = rel * np.abs(a)
        f = lambda b: self.launch(b, side)
        return (8 * (f(a + h) - f(a - h)) - (f(a + 2 * h) - f(a - 2 * h))) / (12 * h)

    def describe(self):
        return {"type": "Z", "parameter": f"{self.along}-coordinate on Z"}


@dataclass(frozen=True)
class PointSource:
    """All unit covectors at a point q, parameterized by the angle center + a of p.

    Fronts over +a and -a meet when the structure is symmetric about the
    direction ``center``.
    """

    ars: Ars
    q: tuple
    center: float = 0.0

    def launch(self, a, side=1):
        a = np.atleast_1d(np.asarray(a, float))
        p = np.array([np.cos(self.center + a), np.sin(self.center + a)])
        x = np.full_like(a, self.q[0])
        y = np.full_like(a, self.q[1])
        z = np.concatenate([np.array([x, y]), p])
        H = hamiltonian(self.ars, z)
        if np.any(H <= 0):
            raise FlowError("covector annihilates the distribution at the source point")
        z[2:] /= np.sqrt(2 * H)
        return z

    def launch_derivative(self, a, side=1, rel=None):
        a = np.atleast_1d(np.asarray(a, float))
        h = 1e-4
        f = lambda b: self.launch(b, side)
        return (8 * (f(a + h) - f(a - h)) - (f(a + 2 * h) - f(a - 2 * h))) / (12 * h)

    def describe(self):
        return {"type": "point", "q": list(self.q), "center": self.center}


def upper_window(a):
    return 2.0 * np.abs(a)


def lower_window(gamma=1.0, delta=0.2):
    def window(a):
        return np.sqrt(np.abs(a)) * (2 * ELLIPTIC_K / math.sqrt(gamma) + delta)
    return window


# --- fronts ----------------------------------------------------------------------

@dataclass
class Front:
    a_grid: np.ndarray
    side: int
    durations: np.ndarray
    flow: object
    source: object
    failures: list = field(default_factory=list)

    def positions_at(self, t):
        """Positions (2, n) of the members at elapsed time t (NaN when out of window)."""
        z, _ = self.flow.at_times(np.full(len(self.a_grid), t) * np.sign(self.durations))
        return z[:2]

    def trajectories(self, n=200):
        s = np.linspace(0, 1, n)
        z, _ = self.flow.at(s)
        return z  # (4, B, n)


def propagate_front(ars: Ars, source, a_range=None, side=1, t_max=None, n_a=128,
                    a_grid=None, window=None, spacing="log", **flow_opts) -> Front:
    """Launch a fan of geodesics from ``source`` over a_range.

    Each member gets its own duration: ``window(a)`` if given, else t_max.
    With spacing='log' the grid is log-spaced in |a| (a_range must not cross 0).
    """
    if a_grid is None:
        lo, hi = a_range
        if n_a < 64:
            raise ValueError("n_a must be at least 64")
        if spacing == "log":
            if lo * hi <= 0:
                raise ValueError("log spacing needs an a-range of one sign")
            a_grid = np.sign(lo) * np.geomspace(abs(lo), abs(hi), n_a)
        else:
            a_grid = np.linspace(lo, hi, n_a)
    a_grid = np.sort(np.asarray(a_grid, float))
    if np.any(np.diff(a_grid) <= 0):
        raise ValueError("a_grid must be strictly monotone")
    if window is not None:
        T = window(a_grid)
    elif t_max is not None:
        T = np.full(len(a_grid), float(t_max))
    else:
        raise ValueError("need t_max or a window")
    z0 = source.launch(a_grid, side)
    failures = []
    bf = flow_batch(ars, z0, T, **flow_opts)
    return Front(a_grid, side, T, bf, source, failures)


# --- intersections -------------------------------------------------------------------

def segment_intersections(P, Q, cell=None):
    """Intersections of polylines P (n, 2) and Q (m, 2) via a uniform spatial hash.

    Returns a list of (i, u, j, v, point): segment i of P at fraction u meets
    segment j of Q at fraction v.
    """
    P = np.asarray(P, float)
    Q = np.asarray(Q, float)
    okP = np.all(np.isfinite(P[:-1]), 1) & np.all(np.isfinite(P[1:]), 1)
    okQ = np.all(np.isfinite(Q[:-1]), 1) & np.all(np.isfinite(Q[1:]), 1)
    if not okP.any() or not okQ.any():
        return []
    if cell is None:
        spans = np.concatenate([np.hypot(*np.diff(P, axis=0)[okP].T), np.hypot(*np.diff(Q, axis=0)[okQ].T)])
        cell = 4.0 * float(np.max(spans)) if spans.size else 1.0
        if cell == 0:
            return []
    grid = defaultdict(list)

    def cells(a, b):
        lo = np.floor(np.minimum(a, b) / cell).astype(int)
        hi = np.floor(np.maximum(a, b) / cell).astype(int)
        for cx in range(lo[0], hi[0] + 1):
            for cy in range(lo[1], hi[1] + 1):
                yield (cx, cy)

    for i in np.flatnonzero(okP):
        for c in cells(P[i], P[i + 1]):
            grid[c].append(i)
    pairs = set()
    for j in np.flatnonzero(okQ):
        for c in cells(Q[j], Q[j + 1]):
            for i in grid.get(c, ()):
                pairs.add((i, j))
    out = []
    for i, j in sorted(pairs):
        p, r = P[i], P[i + 1] - P[i]
        q, s = Q[j], Q[j + 1] - Q[j]
        den = r[0] * s[1] - r[1] * s[0]
        if den == 0:
            continue
        w = q - p
        u = (w[0] * s[1] - w[1] * s[0]) / den
        v = (w[0] * r[1] - w[1] * r[0]) / den
        if 0 <= u <= 1 and 0 <= v <= 1:
            out.append((i, u, j, v, p + u * r))
    return out


# --- refinement ----------------------------------------------------------------------

def _state_and_sensitivity(ars, source, a, side, t, **flow_opts):
    """z(a, t) and d z / d a at fixed time t for parameters a (B,)."""
    a = np.atleast_1d(np.asarray(a, float))
    z0 = source.launch(a, side)
    dz0 = source.launch_derivative(a, side)
    bf = flow_batch(ars, z0, np.full(len(a), t), variations=dz0[:, :, None], **flow_opts)
    z, V = bf.at(1.0)
    return z, V[:, :, 0]


def refine_crossing(ars, source, side, t, a, abar, tol=1e-13, maxit=12, **flow_opts):
    """Newton on pos(a, t) = pos(abar, t) for (a, abar) at fixed t."""
    a, abar = float(a), float(abar)
    for it in range(maxit):
        z, dz = _state_and_sensitivity(ars, source, [a, abar], side, t, **flow_opts)
        r = z[:2, 0] - z[:2, 1]
        J = np.column_stack([dz[:2, 0], -dz[:2, 1]])
        try:
            step = np.linalg.solve(J, r)
        except np.linalg.LinAlgError as exc:
            raise CutSearchError("singular crossing Jacobian") from exc
        a_new, abar_new = a - step[0], abar - step[1]
        if np.sign(a_new) != np.sign(a) or np.sign(abar_new) != np.sign(abar):
            a_new = a - 0.5 * step[0]
            abar_new = abar - 0.5 * step[1]
        a, abar = a_new, abar_new
        if abs(step[0]) <= tol * abs(a) and abs(step[1]) <= tol * abs(abar):
            break
    z, dz = _state_and_sensitivity(ars, source, [a, abar], side, t, **flow_opts)
    return a, abar, z[:, 0], float(np.hypot(*(z[:2, 0] - z[:2, 1])))


def conjugate_check(ars, source, a, side, t_end, n=400, **flow_opts):
    """Sign scan of det[velocity, d pos/d a] on (0, t_end] for each parameter in a.

    ``t_end`` may be a scalar or one duration per parameter. Returns
    (no_zero flags, determinant samples (B, n), first sign-change time or None).
    """
    a = np.atleast_1d(np.asarray(a, float))
    T = np.broadcast_to(np.asarray(t_end, float), a.shape)
    z0 = source.launch(a, side)
    dz0 = source.launch_derivative(a, side)
    bf = flow_batch(ars, z0, T, variations=dz0[:, :, None], **flow_opts)
    s = np.linspace(0, 1, n + 1)[1:]
    z, V = bf.at(s)                       # (4, B, n), (4, B, 1, n)
    vel = np.stack([hamiltonian_vector_field(ars, z[:, :, k])[:2] for k in range(len(s))], -1)
    J = vel[0] * V[1, :, 0] - vel[1] * V[0, :, 0]     # (B, n)
    first = []
    ok = []
    for b in range(len(a)):
        sg = np.sign(J[b])
        idx = np.flatnonzero(sg != sg[0])
        ok.append(idx.size == 0 and sg[0] != 0)
        first.append(None if idx.size == 0 else float(s[idx[0]] * T[b]))
    return np.array(ok), J, first


@dataclass
class CutLocus:
    branches: dict           # label -> array of rows (a, a_bar, t_cut, x, y, residual)
    source: dict
    conjugate_ok: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    COLUMNS = ("a", "a_bar", "t_cut", "x", "y", "residual")

    def branch(self, label):
        rows = self.branches[label]
        return {c: rows[:, k] for k, c in enumerate(self.COLUMNS)}

    def is_empty(self):
        return all(len(v) == 0 for v in self.branches.values())


def front_crossings(front_pos: Front, front_neg: Front, t):
    """Crossings of the two subfronts at elapsed time t, with bracketing parameters."""
    P = front_pos.positions_at(t).T
    Q = front_neg.positions_at(t).T
    hits = segment_intersections(P, Q)
    out = []
    for i, u, j, v, pt in hits:
        a = front_pos.a_grid[i] + u * (front_pos.a_grid[i + 1] - front_pos.a_grid[i])
        abar = front_neg.a_grid[j] + v * (front_neg.a_grid[j + 1] - front_neg.a_grid[j])
        out.append((a, abar, pt))
    return out


def cut_locus(ars: Ars, front_pos: Front, front_neg: Front, probe_times, refine=True,
              match_tol=1e-8, label=None, check_conjugate=True, **flow_opts) -> CutLocus:
    """Cut points between the two subfronts at each probe time.

    At every probe time the polylines of the two fronts are intersected; each
    crossing is polished by Newton on the launch parameters at that fixed
    time (simultaneous arrival). Among several crossings the one reached by
    the parameters of smallest magnitude is kept, since it is the first meeting
    of those geodesics.
    """
    source = front_pos.source
    side = front_pos.side
    rows = []
    notes = []
    for t in np.sort(np.asarray(probe_times, float)):
        cands = front_crossings(front_pos, front_neg, t)
        if not cands:
            notes.append(f"no crossing at t={t:.6g}")
            continue
        a, abar, pt = min(cands, key=lambda c: abs(c[0]) + abs(c[1]))
        res = 0.0
        if refine:
            try:
                a, abar, z, res = refine_crossing(ars, source, side, t, a, abar, **flow_opts)
            except (CutSearchError, FlowError) as exc:
                notes.append(f"refinement failed at t={t:.6g}: {exc}")
                continue
            pt = z[:2]
            if res > match_tol * max(1.0, np.hypot(*pt)):
                notes.append(f"crossing residual {res:.3g} at t={t:.6g}")
                continue
        rows.append((a, abar, t, pt[0], pt[1], res))
    rows = np.array(rows, float).reshape(-1, 6)
    if rows.size:
        rows = rows[np.argsort(np.abs(rows[:, 0]))]
    if label is None:
        label = "cut"
        if rows.size:
            d = ars.det(rows[:, 3], rows[:, 4])
            label = "upper" if np.median(d) > 0 else "lower"
    conj = {}
    if check_conjugate and rows.size:
        conj[label] = bool(np.all(conjugate_before_cut(ars, source, side, rows, **flow_opts)))
    return CutLocus({label: rows}, source.describe(), conj, notes)


def conjugate_before_cut(ars, source, side, rows, n=400, **flow_opts):
    """For each cut row, True when det[velocity, d pos/d a] keeps its sign on (0, t_cut]
    for both meeting geodesics."""
    m = len(rows)
    ok, _, _ = conjugate_check(ars, source, np.r_[rows[:, 0], rows[:, 1]], side,
                               np.r_[rows[:, 2], rows[:, 2]], n=n, **flow_opts)
    return ok[:m] & ok[m:]


# --- fits --------------------------------------------------------------------------

@dataclass
class Fit:
    model: str
    coefficient: float
    exponent: float
    max_rel_residual: float
    n: int


def fit_asymptote(u, v, model="line-through-origin") -> Fit:
    """Weighted least squares of v against u.

    line-through-origin: v = c u, weights 1/u^2 (relative residuals).
    power-law: |v| = c |u|^e, fitted in log-log coordinates.
    """
    u = np.asarray(u, float)
    v = np.asarray(v, float)
    if len(u) < 10:
        raise FitError("need at least 10 points")
    au = np.abs(u[u != 0])
    if au.size == 0 or np.log10(au.max() / au.min()) < 1 - 1e-9:
        raise FitError("points must span at least one decade")
    if model == "line-through-origin":
        w = 1.0 / u ** 2
        c = np.sum(w * u * v) / np.sum(w * u * u)
        rel = np.abs(v - c * u) / np.abs(c * u)
        return Fit(model, float(c), 1.0, float(rel.max()), len(u))
    if model == "power-law":
        X = np.log(np.abs(u))
        Y = np.log(np.abs(v))
        A = np.column_stack([X, np.ones_like(X)])
        (e, logc), *_ = np.linalg.lstsq(A, Y, rcond=None)
        c = math.exp(logc)
        rel = np.abs(np.abs(v) - c * np.abs(u) ** e) / (c * np.abs(u) ** e)
        return Fit(model, float(c), float(e), float(rel.max()), len(u))
    raise ValueError(f"unknown model {model!r}")


# --- convenience -------------------------------------------------------------------

def z_cut_branch(ars: Ars, side, a_range, probe_times, n_a=128, window=None, source=None,
                 check_conjugate=True, **flow_opts) -> CutLocus:
    """Cut locus from Z on one side: fronts for a in +-a_range, swept at probe_times.

    ``a_range`` = (a_min, a_max) with 0 < a_min < a_max; both subfronts are
    log-spaced. ``window`` defaults to 2|a| (upper side) or the lower-side window.
    """
    lo, hi = a_range
    source = source or ZSource(ars)
    if window is None:
        window = upper_window if side > 0 else lower_window()
    fp = propagate_front(ars, source, (lo, hi), side, n_a=n_a, window=window, **flow_opts)
    fn = propagate_front(ars, source, (-hi, -lo), side, n_a=n_a, window=window, **flow_opts)
    return cut_locus(ars, fp, fn, probe_times, check_conjugate=check_conjugate, **flow_opts)
