"""Jacobi elliptic functions at modulus 1/sqrt(2), the model jet systems for
geodesics leaving a tangency point below Z, and predicted cut-locus data.

The model systems describe the expansion of the geodesics launched from Z
in powers of eta = sqrt|a| (below Z) in the rescaled time s = t / eta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .expr import FieldExpr, as_field, taylor_jet

M_PARAM = 0.5  # parameter m = k^2 for modulus k = 1/sqrt(2)


class JetCheckError(RuntimeError):
    pass


def agm(a, b, tol=0.0):
    while True:
        an, bn = 0.5 * (a + b), math.sqrt(a * b)
        if an == a or abs(an - bn) <= tol:
            return an
        a, b = an, bn


def elliptic_K_agm() -> float:
    """Complete elliptic integral of the first kind at modulus 1/sqrt(2): pi / (2 agm(1, 1/sqrt 2))."""
    return math.pi / (2.0 * agm(1.0, math.sqrt(1.0 - M_PARAM)))


K = elliptic_K_agm()


def _landen_ladder():
    a, b, c = [1.0], [math.sqrt(1 - M_PARAM)], [math.sqrt(M_PARAM)]
    while abs(c[-1]) > 1e-17 and len(a) < 30:
        a.append(0.5 * (a[-1] + b[-1]))
        b.append(math.sqrt(a[-2] * b[-1]))
        c.append(0.5 * (a[-2] - b[-2]))
    return np.array(a), np.array(c)


_LADDER_A, _LADDER_C = _landen_ladder()


def jacobi_cn_sn_dn(u):
    """(cn, sn, dn)(u) at modulus 1/sqrt(2) by the descending Landen (AGM) scheme.

    The argument is first reduced modulo 4K, the common period.
    """
    u = np.asarray(u, float)
    ur = np.mod(u + 2 * K, 4 * K) - 2 * K
    a, c = _LADDER_A, _LADDER_C
    N = len(a) - 1
    phi = (2.0 ** N) * a[N] * ur
    prev = phi
    for n in range(N, 0, -1):
        prev = phi
        phi = 0.5 * (phi + np.arcsin(c[n] / a[n] * np.sin(phi)))
    sn, cn = np.sin(phi), np.cos(phi)
    dn = cn / np.cos(prev - phi) if N > 0 else np.ones_like(phi)
    # dn from the last Landen step can lose accuracy near cn = 0; use the identity there
    dn_id = np.sqrt(1.0 - M_PARAM * sn * sn)
    dn = np.where(np.abs(cn) < 1e-3, dn_id, dn)
    if u.ndim == 0:
        return float(cn), float(sn), float(dn)
    return cn, sn, dn


def closed_form_x0_y0(s, gamma):
    g = math.sqrt(gamma)
    cn, sn, dn = jacobi_cn_sn_dn(K + g * np.asarray(s, float))
    x0 = -(math.sqrt(2) / g) * cn
    y0 = -(2.0 / (3 * g)) * (g * np.asarray(s, float) + 2 * sn * cn * dn)
    return x0, y0


# --- model systems ---------------------------------------------------------------

# state: x0, y0, px0, py0, x10, y10, px10, py10, g1, g2, g3, g4
_INIT = np.array([0, 0, 1, -0.5, 1, 1, 0, 0, 0, 0, 0, 0], float)


def _model_rhs(gamma):
    G2 = gamma * gamma

    def rhs(s, z):
        x0, y0, px0, py0, x1, y1, px1, py1, g1, g2, g3, g4 = z
        dx0 = px0
        dy0 = G2 * py0 * x0 ** 4
        dpx0 = -2 * G2 * py0 ** 2 * x0 ** 3
        dpy0 = 0.0 * py0
        dx1 = px1
        dy1 = G2 * (py1 * x0 ** 4 - 2 * py0 * x0 ** 2 * (y0 - 2 * x0 * x1))
        dpx1 = G2 * py0 * x0 * (-4 * py1 * x0 ** 2 + 2 * py0 * y0 - 6 * py0 * x0 * x1)
        dpy1 = G2 * py0 ** 2 * x0 ** 2     # O(eta) part of -f f_y p_y^2, with f_y = eta gamma
        dg1 = g3
        dg2 = -G2 * x0 ** 3 * (2 * g1 + x0 ** 2)
        dg3 = -0.25 * G2 * x0 ** 2 * (6 * g1 + 5 * x0 ** 2)
        dg4 = 0.0 * g4
        return np.array([dx0, dy0, dpx0, dpy0, dx1, dy1, dpx1, dpy1, dg1, dg2, dg3, dg4])

    return rhs


def model_rhs_alpha(gamma, alpha):
    """Right-hand side of the first-order system with alpha kept explicit (8 states)."""
    G2 = gamma * gamma

    def rhs(s, z):
        x0, y0, px0, py0, x1, y1, px1, py1 = z
        return np.array([
            px0, G2 * py0 * x0 ** 4, -2 * G2 * py0 ** 2 * x0 ** 3, 0.0 * py0,
            px1,
            G2 * (py1 * x0 ** 4 - 2 * py0 * x0 ** 2 * (y0 - 2 * x0 * x1 - alpha * x0 ** 3)),
            G2 * py0 * x0 * (-4 * py1 * x0 ** 2 + 2 * py0 * y0 - 6 * py0 * x0 * x1 - 5 * alpha * py0 * x0 ** 3),
            G2 * py0 ** 2 * x0 ** 2,
        ])

    return rhs


@dataclass
class JetSolution:
    gamma: float
    s_grid: np.ndarray
    states: np.ndarray         # (12, n): x0 y0 px0 py0 x10 y10 px10 py10 g1 g2 g3 g4
    constants: dict
    closed_form_max_err: float
    J0_min_abs: float
    sol: object = field(repr=False, default=None)

    def __getattr__(self, name):
        names = ("x0", "y0", "px0", "py0", "x10", "y10", "px10", "py10", "g1", "g2", "g3", "g4")
        if name in names:
            return self.states[names.index(name)]
        raise AttributeError(name)

    def at(self, s):
        return self.sol(s)


def integrate_model(gamma, s_end, method="DOP853", rtol=1e-13, atol=1e-15, dense=True):
    return solve_ivp(_model_rhs(gamma), (0.0, s_end), _INIT, method=method, rtol=rtol, atol=atol,
                     dense_output=dense)


def solve_model_jets(gamma: float = 1.0, n_grid=2001, tol=1e-8) -> JetSolution:
    """Integrate the model systems on [0, 2K/sqrt(gamma) + 0.5] and check the closed forms."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    sbar = 2 * K / math.sqrt(gamma)
    res = integrate_model(gamma, sbar + 0.5)
    if not res.success:
        raise JetCheckError(res.message)
    s = np.linspace(0, sbar, n_grid)
    Z = res.sol(s)
    x0c, y0c = closed_form_x0_y0(s, gamma)
    err = float(max(np.max(np.abs(Z[0] - x0c)), np.max(np.abs(Z[1] - y0c))))
    if err > tol:
        raise JetCheckError(f"closed-form mismatch {err:.3g} exceeds {tol:g}")
    zb = res.sol(sbar)
    consts = {
        "K": K,
        "sbar": sbar,
        "x10": float(zb[4]),
        "y10": float(zb[5]),
        "g1": float(zb[8]),
        "g2": float(zb[9]),
        "two_g1_plus_g2": float(2 * zb[8] + zb[9]),
        "py0_drift": float(np.max(np.abs(Z[3] + 0.5))),
        "g4_drift": float(np.max(np.abs(Z[11]))),
    }
    if consts["two_g1_plus_g2"] == 0:
        raise JetCheckError("2 g1 + g2 vanishes at the half period")
    s_full = np.linspace(0, sbar + 0.5, n_grid)
    j0 = J0_scan(res.sol, gamma, sbar + 0.2)
    return JetSolution(gamma, s_full, res.sol(s_full), consts, err, j0, res.sol)


def J0(sol, gamma, s):
    """J0 = x0 y0' - 3 y0 x0' along the model solution."""
    z = sol(s)
    dz = _model_rhs(gamma)(s, z)
    return z[0] * dz[1] - 3 * z[1] * dz[0]


def J0_scan(sol, gamma, s_end, step=1e-3, s_report=0.1):
    """Scan J0 on (0, s_end] for sign changes; returns 0 if one exists, else min |J0| on [s_report, s_end].

    J0 ~ -s^5/5 near s = 0, so the minimum is only reported away from the origin.
    """
    s = np.arange(step, s_end + step / 2, step)
    v = J0(sol, gamma, s)
    if np.any(np.sign(v[1:]) != np.sign(v[:-1])):
        return 0.0
    keep = s >= s_report
    s, v = s[keep], v[keep]
    i = int(np.argmin(np.abs(v)))
    lo, hi = s[max(i - 1, 0)], s[min(i + 1, len(s) - 1)]
    fine = np.linspace(lo, hi, 201)
    return float(min(np.min(np.abs(v)), np.min(np.abs(J0(sol, gamma, fine)))))


def half_period_constants(gamma=1.0, method="DOP853", rtol=1e-13, atol=1e-15):
    """x10, g1, g2 at s = 2K/sqrt(gamma) from the chosen integrator."""
    sbar = 2 * K / math.sqrt(gamma)
    res = solve_ivp(_model_rhs(gamma), (0.0, sbar), _INIT, method=method, rtol=rtol, atol=atol)
    z = res.y[:, -1]
    return {"x10": z[4], "y10": z[5], "g1": z[8], "g2": z[9], "two_g1_plus_g2": 2 * z[8] + z[9],
            "nfev": res.nfev}


# --- F3 parameters and predictions -------------------------------------------------

@dataclass(frozen=True)
class F3Params:
    """Parameters of the local form F1 = d/dx, F2 = (y - x^2 psi(x)) e^{xi(x,y)} d/dy.

    Internally the y-axis is rescaled so that psi(0) = 1; gamma = e^{xi(0,0)}
    and alpha = psi'(0)/psi(0) + d xi/dx (0,0) refer to the rescaled form.
    """

    psi: FieldExpr
    xi: FieldExpr

    @classmethod
    def make(cls, psi="1", xi="0"):
        return cls(as_field(psi), as_field(xi))

    @property
    def psi0(self):
        return float(taylor_jet(self.psi, (0.0, 0.0), 0).value)

    @property
    def dpsi0(self):
        return float(taylor_jet(self.psi, (0.0, 0.0), 1).coeff(1, 0))

    @property
    def gamma(self):
        return math.exp(float(taylor_jet(self.xi, (0.0, 0.0), 0).value))

    @property
    def alpha(self):
        if self.psi0 <= 0:
            raise ValueError("psi(0) must be positive")
        return self.dpsi0 / self.psi0 + float(taylor_jet(self.xi, (0.0, 0.0), 1).coeff(1, 0))

    @property
    def alpha_degenerate(self):
        return abs(self.alpha) < 1e-12

    def f_text(self):
        return f"(y - x^2*({self.psi.source_text}))*exp({self.xi.source_text})"


def predict_cut_coefficients(params: F3Params, a: float, jets: JetSolution | None = None) -> dict:
    """Leading-order cut data for the launch parameter a (upper side) and eta0 = sqrt|a| (lower side).

    Lengths along y are reported in the original (unscaled) chart.
    """
    if abs(a) > 0.1:
        raise ValueError("|a| must be at most 0.1")
    psi0 = params.psi0
    dpsi = params.dpsi0 / psi0
    g = params.gamma
    out = {
        "upper": {
            "x_int": -0.5 * dpsi * a * a,
            "y_int": psi0 * a * a,
            "t_int": abs(a) * (1 + 0.5 * a * dpsi),
            "a_bar": -a - a * a * dpsi,
        },
        "alpha": params.alpha,
        "gamma": g,
    }
    if params.alpha_degenerate:
        out["lower"] = None
        out["lower_error"] = "alpha = 0: lower-branch prediction undefined"
        return out
    if jets is None or abs(jets.gamma - g) > 1e-14:
        jets = solve_model_jets(g)
    c = jets.constants
    al = params.alpha
    eta0 = math.sqrt(abs(a))
    sg = math.sqrt(g)
    c_plus = sg * (al * c["g2"] - 2 * c["x10"]) / (4 * K)
    out["lower"] = {
        "eta0": eta0,
        "t0": 2 * K / sg * eta0,
        "x_int": eta0 ** 2 * al * c["two_g1_plus_g2"] / 2,
        "y_int": -psi0 * eta0 ** 3 * 4 * K / (3 * sg),
        "c_plus": c_plus,
        "c_minus": -sg * (al * c["g2"] + 2 * c["x10"]) / (4 * K),
        "t_int": 2 * K / sg * (eta0 - sg * (al * c["g2"] - 2 * c["x10"]) / (4 * K) * eta0 ** 2),
        "a_bar": -abs(a) + sg * al / K * c["g2"] * abs(a) ** 1.5,
        "omega": omega_candidate(jets),
        # y_int = y_eta3 eta0^3 + y_eta4 eta0^4 + o(eta0^4)
        "y_eta3": -psi0 * 4 * K / (3 * sg),
        "y_eta4": psi0 * (-4 * K * c_plus / sg + c["y10"] + al * c["g2"]),
    }
    return out


def omega_candidate(jets: JetSolution) -> float:
    """omega from matching (x, y) = (alpha omega t^2, -t^3) to the eta0 parametrization."""
    c = jets.constants
    sg = math.sqrt(jets.gamma)
    return c["two_g1_plus_g2"] / 2 * (3 * sg / (4 * K)) ** (2.0 / 3.0)
