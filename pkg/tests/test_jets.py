import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad
from scipy.special import ellipj, ellipk

from ars2.cutlocus import ZSource
from ars2.frames import Ars
from ars2.geodesics import flow_geodesic
from ars2.jets import (K, F3Params, JetCheckError, agm, closed_form_x0_y0, elliptic_K_agm,
                       half_period_constants, jacobi_cn_sn_dn, predict_cut_coefficients,
                       solve_model_jets)

# DERIVED: closed forms of the half-period constants at gamma = 1
X10 = math.pi / 3 - 1
Y10 = 1 - 4 * math.pi / 3
C_PLUS = 0.41088        # (g2 - 2 x10) / (4K) with alpha = 1
C_MINUS = -0.43633


def test_agm_basics():
    assert agm(1.0, 1.0) == 1.0
    # agm(a, b) = pi a / (2 K(m)) with m = 1 - (b/a)^2
    for a, b in ((2.0, 8.0), (1.0, 0.3), (5.0, 4.0)):
        assert agm(a, b) == pytest.approx(math.pi * a / (2 * ellipk(1 - (b / a) ** 2)), rel=1e-14)


def test_elliptic_constant_against_quadrature():
    val, _ = quad(lambda t: 1.0 / math.sqrt(1 - 0.5 * math.sin(t) ** 2), 0, math.pi / 2, epsabs=1e-14, epsrel=1e-14)
    assert abs(elliptic_K_agm() - val) <= 1e-12
    assert K == pytest.approx(1.8540746773013719, abs=1e-15)


@settings(max_examples=50, deadline=None)
@given(u=st.floats(-20, 20))
def test_jacobi_functions_match_scipy(u):
    cn, sn, dn = jacobi_cn_sn_dn(u)
    s, c, d, _ = ellipj(u, 0.5)
    assert abs(cn - c) < 1e-13 and abs(sn - s) < 1e-13 and abs(dn - d) < 1e-13


def test_jacobi_identities():
    u = np.linspace(-3 * K, 5 * K, 1001)
    cn, sn, dn = jacobi_cn_sn_dn(u)
    assert np.allclose(cn ** 2 + sn ** 2, 1, atol=1e-14)
    assert np.allclose(dn ** 2 + 0.5 * sn ** 2, 1, atol=1e-14)


@pytest.mark.parametrize("gamma", [0.5, 1.0, 2.0])
def test_closed_forms(gamma):
    sol = solve_model_jets(gamma)
    assert sol.closed_form_max_err <= 1e-8
    s = np.linspace(0, 2 * K / math.sqrt(gamma), 201)
    x0, y0 = closed_form_x0_y0(s, gamma)
    z = sol.at(s)
    assert np.max(np.abs(z[0] - x0)) <= 1e-8 and np.max(np.abs(z[1] - y0)) <= 1e-8


def test_closed_form_endpoints():
    x0, y0 = closed_form_x0_y0(np.array([0.0, 2 * K]), 1.0)
    assert np.allclose(x0, 0.0, atol=1e-15)
    assert y0[1] == pytest.approx(-4 * K / 3, rel=1e-14)


def test_half_period_constants_closed_forms():
    c = solve_model_jets(1.0).constants
    assert c["x10"] == pytest.approx(X10, abs=1e-10)
    assert c["y10"] == pytest.approx(Y10, abs=1e-10)
    assert c["g1"] == pytest.approx(-math.pi, abs=1e-10)
    assert c["g2"] == pytest.approx(math.pi, abs=1e-10)
    assert c["two_g1_plus_g2"] == pytest.approx(-math.pi, abs=1e-10)


def test_two_integrators_agree():
    a = half_period_constants(1.0, "DOP853")
    b = half_period_constants(1.0, "RK45", rtol=1e-12, atol=1e-14)
    for key in ("x10", "y10", "g1", "g2", "two_g1_plus_g2"):
        assert abs(a[key] - b[key]) <= 1e-8


def test_J0_has_no_zero_before_half_period():
    assert solve_model_jets(1.0).J0_min_abs > 0


def test_gamma_must_be_positive():
    with pytest.raises(ValueError):
        solve_model_jets(0.0)


def test_exact_flow_matches_first_order_jets():
    # x(2K eta) / eta^2 -> x10 + alpha g1 for a geodesic launched below Z from a = eta^2
    ars = Ars.f_chart("y - x^2*(1+x)")
    src = ZSource(ars)
    c = solve_model_jets(1.0).constants
    for sgn, want in ((1, c["x10"] + c["g1"]), (-1, -c["x10"] + c["g1"])):
        vals = []
        for eta in (0.02, 0.01):
            g = flow_geodesic(ars, src.launch(sgn * eta ** 2, -1)[:, 0], 2 * K * eta, n_samples=2)
            vals.append(g.states[0, -1] / eta ** 2)
            assert g.states[1, -1] / eta ** 3 == pytest.approx(-4 * K / 3, rel=3 * eta)
        assert 2 * vals[1] - vals[0] == pytest.approx(want, abs=0.01)


def test_f3_parameters():
    p = F3Params.make("1 + x")
    assert p.psi0 == 1 and p.dpsi0 == 1 and p.gamma == 1 and p.alpha == 1
    q = F3Params.make("2 + 2*x", "0.1*x")
    assert q.alpha == pytest.approx(1.1)
    assert q.gamma == 1
    assert F3Params.make("1").alpha_degenerate
    with pytest.raises(ValueError):
        F3Params.make("-1 + x").alpha


def test_predictions_for_the_example():
    pred = predict_cut_coefficients(F3Params.make("1 + x"), 0.01)
    up, lo = pred["upper"], pred["lower"]
    assert up["x_int"] == pytest.approx(-0.5e-4)
    assert up["y_int"] == pytest.approx(1e-4)
    assert lo["t0"] == pytest.approx(0.2 * K)
    assert lo["x_int"] == pytest.approx(-math.pi / 2 * 0.01, rel=1e-9)
    assert lo["y_int"] == pytest.approx(-4 * K / 3 * 1e-3, rel=1e-12)
    assert lo["c_plus"] == pytest.approx(C_PLUS, abs=1e-5)
    assert lo["c_minus"] == pytest.approx(C_MINUS, abs=1e-5)
    assert lo["y_eta4"] / lo["y_eta3"] == pytest.approx(1.2517, abs=1e-4)


def test_prediction_limits():
    with pytest.raises(ValueError):
        predict_cut_coefficients(F3Params.make("1 + x"), 0.2)
    deg = predict_cut_coefficients(F3Params.make("1"), 0.01)
    assert deg["lower"] is None and "alpha" in deg["lower_error"]


def test_closed_form_check_can_fail():
    # a tolerance below rounding level must trip the check
    with pytest.raises(JetCheckError):
        solve_model_jets(1.0, tol=1e-18)
