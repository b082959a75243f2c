"""Hamiltonian geodesic flow, transversal covectors, the chart map E and
variational (Jacobi field) equations.

With G_i(q, p) = <p, F_i(q)> the Hamiltonian is H = (G_1^2 + G_2^2)/2 and

    dq/dt = G_1 F_1 + G_2 F_2,    dp/dt = -(G_1 grad_q G_1 + G_2 grad_q G_2).

All frame derivatives come from Taylor jets, so no Jacobian is coded by hand.
Batches of trajectories are integrated together; each member i gets its own
duration T_i by integrating in s in [0, 1] with dz/ds = T_i X_H(z).
"""

from __future__ import annotations

import contextlib
import contextvars
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .frames import Ars

_H_LOG = contextvars.ContextVar("ars2_h_log", default=None)


class FlowError(RuntimeError):
    pass


@contextlib.contextmanager
def track_hamiltonian():
    """Collect max |H(t) - H(0)| and max |H(t) - 1/2| of every flow run inside the block."""
    log = []
    token = _H_LOG.set(log)
    try:
        yield log
    finally:
        _H_LOG.reset(token)


def _log_h(entry):
    log = _H_LOG.get()
    if log is not None:
        log.append(entry)


@dataclass
class GeodesicState:
    x: float
    y: float
    px: float
    py: float

    def as_array(self):
        return np.array([self.x, self.y, self.px, self.py], float)

    @classmethod
    def from_array(cls, z):
        return cls(*(float(v) for v in z))


def hamiltonian(ars: Ars, z):
    """H at phase points z of shape (4, ...)."""
    z = np.asarray(z, float)
    (a1, a2), (b1, b2) = ars.frame(z[0], z[1])
    G1 = z[2] * a1 + z[3] * a2
    G2 = z[2] * b1 + z[3] * b2
    return 0.5 * (G1 * G1 + G2 * G2)


def _frame_data(ars, x, y, order):
    """Values, first and (optionally) second derivatives of the frame components.

    Returns F (2 fields, 2 comps, B), dF (2, 2, 2 partials, B), d2F (2, 2, 2, 2, B).
    """
    jets = ars.frame_jets(x, y, order)
    vals = np.array([j.value for j in jets]).reshape(2, 2, -1)
    d1 = np.array([[j.coeff(1, 0), j.coeff(0, 1)] for j in jets]).reshape(2, 2, 2, -1)
    if order < 2:
        return vals, d1, None
    d2 = np.array([[[2 * j.coeff(2, 0), j.coeff(1, 1)], [j.coeff(1, 1), 2 * j.coeff(0, 2)]]
                   for j in jets]).reshape(2, 2, 2, 2, -1)
    return vals, d1, d2


def hamiltonian_vector_field(ars: Ars, z, with_linearization=False):
    """X_H at z (shape (4, B)); optionally also its Jacobian of shape (4, 4, B)."""
    x, y, p = z[0], z[1], z[2:4]
    F, dF, d2F = _frame_data(ars, x, y, 2 if with_linearization else 1)
    G = np.einsum("kb,ikb->ib", p, F)                   # G_i = p . F_i
    gradG = np.einsum("kb,ikjb->ijb", p, dF)            # d G_i / d q_j
    qdot = np.einsum("ib,ikb->kb", G, F)
    pdot = -np.einsum("ib,ijb->jb", G, gradG)
    out = np.concatenate([qdot, pdot])
    if not with_linearization:
        return out
    B = z.shape[1]
    J = np.zeros((4, 4, B))
    # d qdot_k / d q_j = sum_i gradG_ij F_ik + G_i dF_ikj
    J[0:2, 0:2] = np.einsum("ijb,ikb->kjb", gradG, F) + np.einsum("ib,ikjb->kjb", G, dF)
    # d qdot_k / d p_l = sum_i F_il F_ik
    J[0:2, 2:4] = np.einsum("ilb,ikb->klb", F, F)
    hessG = np.einsum("kb,ikjmb->ijmb", p, d2F)         # d^2 G_i / dq_j dq_m
    J[2:4, 0:2] = -(np.einsum("imb,ijb->jmb", gradG, gradG) + np.einsum("ib,ijmb->jmb", G, hessG))
    # d pdot_j / d p_l = -sum_i (F_il gradG_ij + G_i dF_ilj)
    J[2:4, 2:4] = -(np.einsum("ilb,ijb->jlb", F, gradG) + np.einsum("ib,iljb->jlb", G, dF))
    return out, J


@dataclass
class BatchFlow:
    """Dense solution of a batch of geodesics, parameterized by s in [0, 1].

    Member i is at time t = T[i] * s. ``variations`` counts the tangent
    vectors carried along (shape (4, B, k) after evaluation).
    """

    T: np.ndarray
    sol: object
    n: int
    k: int
    h_drift: float
    h_dev_half: float
    nfev: int
    ars: Ars = None
    t_nodes: np.ndarray = None
    y_nodes: np.ndarray = None

    def at(self, s):
        """State (4, B) and variations (4, B, k) at scalar s."""
        Y = self.sol(s)
        return self._split(Y)

    def _split(self, Y):
        B, k = self.n, self.k
        z = Y[: 4 * B].reshape(4, B, *Y.shape[1:])
        if k == 0:
            return z, None
        V = Y[4 * B:].reshape(4, B, k, *Y.shape[1:])
        return z, V

    def at_times(self, t):
        """States of every member at the same elapsed time t (members with |T| < |t| give NaN)."""
        s = np.asarray(t, float) / self.T
        ok = (s >= 0) & (s <= 1 + 1e-12)
        su = np.unique(np.clip(s[ok], 0, 1))
        z = np.full((4, self.n), np.nan)
        V = np.full((4, self.n, self.k), np.nan) if self.k else None
        if su.size:
            Y = self.sol(su)
            zz, VV = self._split(Y)
            idx = np.searchsorted(su, np.clip(s[ok], 0, 1))
            members = np.flatnonzero(ok)
            z[:, members] = zz[:, members, idx]
            if self.k:
                V[:, members] = VV[:, members, :, idx]
        return z, V


def flow_batch(ars: Ars, z0, T, variations=None, rtol=1e-12, atol=1e-13, scale=None,
               h_tol=1e-10, dense=True, retry=True, max_step=np.inf):
    """Integrate geodesics from z0 (4, B) for durations T (B,), optionally with variations.

    ``scale`` (4, B) sets per-component absolute tolerances atol * scale; by
    default the initial magnitudes (at least 1) are used, which keeps the
    large p_y of launches near Z under relative control.
    """
    z0 = np.asarray(z0, float)
    if z0.ndim == 1:
        z0 = z0[:, None]
    B = z0.shape[1]
    T = np.broadcast_to(np.asarray(T, float), (B,)).copy()
    k = 0
    if variations is not None:
        variations = np.asarray(variations, float)
        if variations.ndim == 2:
            variations = variations[:, :, None]
        k = variations.shape[2]
    if scale is None:
        scale = np.maximum(np.abs(z0), 1.0)
    scale = np.broadcast_to(scale, (4, B))
    parts = [scale.ravel()]
    if k:
        parts.append(np.maximum(np.abs(variations), 1.0).ravel())
    atol_vec = atol * np.concatenate(parts)

    def rhs(s, Y):
        z = Y[: 4 * B].reshape(4, B)
        if k:
            f, J = hamiltonian_vector_field(ars, z, with_linearization=True)
            V = Y[4 * B:].reshape(4, B, k)
            dV = np.einsum("ijb,jbk->ibk", J, V) * T[None, :, None]
            return np.concatenate([(f * T).ravel(), dV.ravel()])
        return (hamiltonian_vector_field(ars, z) * T).ravel()

    Y0 = z0.ravel() if not k else np.concatenate([z0.ravel(), variations.ravel()])
    H0 = hamiltonian(ars, z0)
    for attempt in range(2 if retry else 1):
        res = solve_ivp(rhs, (0.0, 1.0), Y0, method="DOP853", rtol=rtol, atol=atol_vec,
                        dense_output=dense, max_step=max_step)
        if not res.success:
            raise FlowError(f"integration failed: {res.message}")
        Hs = hamiltonian(ars, res.y[: 4 * B].reshape(4, B, -1))
        drift = np.nanmax(np.abs(Hs - H0[:, None])) if Hs.size else 0.0
        dev = np.nanmax(np.abs(Hs - 0.5))
        per_time = drift / max(np.max(np.abs(T)), 1e-300)
        if per_time <= h_tol or drift <= 1e-12:
            break
        rtol, atol_vec = rtol * 0.1, atol_vec * 0.1
    else:
        raise FlowError(f"Hamiltonian drift {drift:.3g} exceeds tolerance")
    _log_h({"drift": float(drift), "dev_half": float(dev), "n": B, "T": float(np.max(np.abs(T)))})
    return BatchFlow(T, res.sol, B, k, float(drift), float(dev), res.nfev, ars, res.t, res.y)


@dataclass
class Geodesic:
    t: np.ndarray
    states: np.ndarray          # (4, n)
    H: np.ndarray
    source_tag: dict = field(default_factory=dict)
    jac_det: np.ndarray | None = None

    def state(self, i):
        return GeodesicState.from_array(self.states[:, i])


def flow_geodesic(ars: Ars, s0, T, n_samples=201, **opts) -> Geodesic:
    """Single geodesic from s0 over time T (negative T flows backward)."""
    z0 = s0.as_array() if isinstance(s0, GeodesicState) else np.asarray(s0, float)
    bf = flow_batch(ars, z0[:, None], np.array([T], float), **opts)
    s = np.linspace(0, 1, n_samples)
    z, _ = bf.at(s)
    z = z[:, 0, :]
    return Geodesic(T * s, z, hamiltonian(ars, z), {"z0": z0.tolist()})


@dataclass
class VariationalFrame:
    t: np.ndarray
    states: np.ndarray        # (4, n)
    columns: np.ndarray       # (4, 2, n): d/dt and d/da of (x, y, px, py)
    jac_det: np.ndarray       # (n,)

    def first_sign_change(self):
        """Time of the first sign change of jac_det after t=0, or None."""
        d = self.jac_det[1:]
        s0 = np.sign(d[0])
        idx = np.flatnonzero(np.sign(d) != s0)
        return None if idx.size == 0 else float(self.t[1 + idx[0]])


def variational_flow(ars: Ars, s0, da_direction, T, n_samples=401, **opts) -> VariationalFrame:
    """Integrate the geodesic with its variation along da_direction (a 4-vector).

    The position block is [velocity | d position / da]; its determinant
    vanishes exactly at conjugate times of the one-parameter family.
    """
    z0 = s0.as_array() if isinstance(s0, GeodesicState) else np.asarray(s0, float)
    bf = flow_batch(ars, z0[:, None], np.array([T], float), variations=np.asarray(da_direction, float)[:, None, None], **opts)
    s = np.linspace(0, 1, n_samples)
    z, V = bf.at(s)
    z, V = z[:, 0], V[:, 0, 0]
    vel = hamiltonian_vector_field(ars, z)
    cols = np.stack([vel, V], axis=1)
    jd = cols[0, 0] * cols[1, 1] - cols[1, 0] * cols[0, 1]
    return VariationalFrame(T * s, z, cols, jd)


# --- initial covectors -----------------------------------------------------------

def transversal_covector(ars: Ars, point, tangent, side=1) -> GeodesicState:
    """Covector p with p(tangent) = 0 and H = 1/2.

    Of the two solutions the one with p(V) > 0 for (V, tangent) positively
    oriented is returned; ``side = -1`` gives the other one.
    """
    z = np.asarray(transversal_covectors(ars, np.asarray(point, float)[:, None],
                                         np.asarray(tangent, float)[:, None], side))[:, 0]
    return GeodesicState.from_array(z)


def transversal_covectors(ars: Ars, points, tangents, side=1):
    """Vectorized transversal_covector; points and tangents have shape (2, B)."""
    P = np.asarray(points, float)
    Tv = np.asarray(tangents, float)
    n = np.array([-Tv[1], Tv[0]])
    (a1, a2), (b1, b2) = ars.frame(P[0], P[1])
    Hn = 0.5 * ((n[0] * a1 + n[1] * a2) ** 2 + (n[0] * b1 + n[1] * b2) ** 2)
    if np.any(Hn <= 0) or np.any(~np.isfinite(Hn)):
        raise FlowError("tangent direction degenerates the Hamiltonian: no transversal covector")
    lam = 1.0 / np.sqrt(2 * Hn)
    p = -ars.orientation_M * side * lam * n
    return np.concatenate([P, p])


def z_covectors(ars: Ars, points, tangents, side=1):
    """Transversal covectors at points of Z launching into {det > 0} (side=+1) or {det < 0}."""
    z = transversal_covectors(ars, points, tangents, 1)
    vel = hamiltonian_vector_field(ars, z)[:2]
    j = ars.det_jet(z[0], z[1], 1)
    rate = vel[0] * j.coeff(1, 0) + vel[1] * j.coeff(0, 1)
    if np.any(rate == 0):
        raise FlowError("launch direction tangent to Z")
    flip = np.sign(rate) != side
    z[2:, flip] *= -1
    return z


# --- the chart map E ---------------------------------------------------------------

def covector_along(ars: Ars, curve, ybar, dy=1e-4):
    """Initial data along a parameterized curve: covector z(ybar) and dz/dybar (4, B) each.

    The covector derivative uses a fourth-order central difference.
    """
    ybar = np.atleast_1d(np.asarray(ybar, float))

    def cov(yy):
        return transversal_covectors(ars, curve.point(yy), curve.velocity(yy))

    z = cov(ybar)
    dp = (8 * (cov(ybar + dy) - cov(ybar - dy)) - (cov(ybar + 2 * dy) - cov(ybar - 2 * dy))) / (12 * dy)
    dz = np.concatenate([curve.velocity(ybar), dp[2:]])
    return z, dz


class ChartRadiusError(ValueError):
    pass


def chart_map(ars: Ars, curve, xbar, ybar, radius=None, with_jacobian=True, **opts):
    """E on the lattice xbar x ybar.

    Returns E (2, nx, ny) and, when requested, DE (2, 2, nx, ny) with columns
    dE/dxbar, dE/dybar.
    """
    xbar = np.atleast_1d(np.asarray(xbar, float))
    ybar = np.atleast_1d(np.asarray(ybar, float))
    if radius is not None and np.max(np.abs(xbar)) > radius:
        raise ChartRadiusError("xbar exceeds the chart radius")
    z0, dz0 = covector_along(ars, curve, ybar)
    ny, nx = len(ybar), len(xbar)
    E = np.empty((2, nx, ny))
    DE = np.empty((2, 2, nx, ny))
    for sgn in (1.0, -1.0):
        sel = np.flatnonzero((xbar * sgn > 0))
        if sel.size == 0:
            continue
        Tmax = sgn * np.max(np.abs(xbar[sel]))
        bf = flow_batch(ars, z0, np.full(ny, Tmax), variations=dz0[:, :, None] if with_jacobian else None, **opts)
        for i in sel:
            z, V = bf.at(xbar[i] / Tmax)
            E[:, i, :] = z[:2]
            if with_jacobian:
                DE[:, 0, i, :] = hamiltonian_vector_field(ars, z)[:2]
                DE[:, 1, i, :] = V[:2, :, 0]
    zero = np.flatnonzero(xbar == 0)
    for i in zero:
        E[:, i, :] = z0[:2]
        DE[:, 0, i, :] = hamiltonian_vector_field(ars, z0)[:2]
        DE[:, 1, i, :] = dz0[:2]
    return (E, DE) if with_jacobian else E


def chart_map_E(ars: Ars, curve, xbar, ybar, **opts):
    """E(xbar, ybar): flow the transversal covector at curve(ybar) for time xbar."""
    E = chart_map(ars, curve, [xbar], [ybar], with_jacobian=False, **opts)
    return E[:, 0, 0]
