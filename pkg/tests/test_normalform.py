import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ars2.curvature import GenericityError, gauss_curvature
from ars2.frames import Ars, tangency_type
from ars2.normalform import (KindMismatchError, NormalFormError, ODECurve, Reparam, Reversed,
                             canonical_chart, canonical_curve, invert_point, spade_branch,
                             tangency_curve, transform_structure, verify_conditions)

PSI = ("x + 0.1*y^2", "y + 0.05*x*y")
GRID = np.linspace(-0.1, 0.1, 11)


def test_reparam_and_reversed_curves():
    base = ODECurve(lambda p: np.array([np.ones_like(p[0]), np.zeros_like(p[0])]), (0.0, 0.0), (-1.0, 1.0))
    rev = Reversed(base)
    assert np.allclose(rev.point([0.3]), [[-0.3], [0.0]])
    assert np.allclose(rev.velocity([0.3]), [[-1.0], [0.0]])
    rp = Reparam(base, lambda e: 2.0 + 0 * e, 0.9)
    assert np.allclose(rp.phi([0.2, -0.1]), [0.4, -0.2], atol=1e-12)
    assert rp.span == pytest.approx((-0.45, 0.45), abs=1e-9)
    with pytest.raises(ValueError):
        rp.point([0.5])


def test_r1_chart_of_x_plus_one_is_identity_like():
    chart = canonical_chart(Ars.f_chart("x + 1"), (0.0, 0.0), GRID, GRID)
    X = GRID[:, None] + 0 * GRID[None, :]
    assert np.max(np.abs(chart.f_tilde - (X + 1))) <= 1e-8
    assert chart.diagnostics["orthonormal"]
    rep = verify_conditions(chart)
    assert rep.suite == "R1" and rep.ok


def test_r1_second_structure_has_same_curvature_other_invariant():
    chart = canonical_chart(Ars.f_chart("1/(x+1)^2"), (0.0, 0.0), GRID, GRID)
    assert verify_conditions(chart).ok
    # the invariant stays a function of xbar alone and matches at xbar = 0
    assert np.max(np.abs(chart.f_tilde - chart.f_tilde[:, :1])) < 1e-8
    assert chart.f_tilde[5, 5] == pytest.approx(1.0, abs=1e-10)


def test_grushin_suite():
    chart = canonical_chart(Ars.f_chart("x*exp(0.3*x*y)"), (0.0, 0.0), GRID, GRID)
    rep = verify_conditions(chart)
    assert rep.suite == "G" and rep.ok
    assert rep.residuals["Ga"] <= 1e-7 and rep.residuals["Gb"] <= 1e-5


def test_tangency_suite_and_sign_cross_check():
    ars = Ars.f_chart("y - x^2*(1+x)")
    g = np.linspace(-0.05, 0.05, 11)
    chart = canonical_chart(ars, (0.0, 0.0), g, g, length=0.2)
    rep = verify_conditions(chart)
    assert rep.suite == "T" and rep.ok
    # the algebraic sign pattern of the chart agrees with the rotation sign
    kind = tangency_type(ars, (0.0, 0.0))
    assert (rep.residuals["Td"] > 0) == (kind == "TangencyPlus")
    assert np.allclose(rep.details["fxx"], -2.0 if kind == "TangencyPlus" else 2.0, atol=1e-6)


def test_tangency_minus_structure():
    ars = Ars.f_chart("x^2*(1+x) - y")
    g = np.linspace(-0.04, 0.04, 9)
    chart = canonical_chart(ars, (0.0, 0.0), g, g, length=0.2)
    rep = verify_conditions(chart)
    assert chart.point_kind.kind == "TangencyMinus"
    assert rep.ok and rep.residuals["Td"] < 0


def test_tangency_curve_reparameterization():
    ars = Ars.f_chart("y - x^2*(1+x)")
    curve = tangency_curve(ars, (0.0, 0.0), length=0.15)
    assert curve.span[0] < -0.1 and curve.span[1] > 0.1
    assert np.allclose(curve.point([0.0])[:, 0], 0.0, atol=1e-14)


def test_spade_branch_tangent_at_tangency():
    br = spade_branch(Ars.f_chart("y - x^2*(1+x)"), (0.0, 0.0), length=0.1)
    v = br.velocity(0.0)[:, 0]
    assert v[0] / v[1] == pytest.approx(-0.3, abs=1e-6)


SADDLE = "exp(x^2*(1 + 0.5*y^2 + 0.3*y^3)/2)"


def test_r2_saddle_suite():
    g = np.linspace(-0.05, 0.05, 11)
    chart = canonical_chart(Ars.f_chart(SADDLE), (0.0, 0.0), g, g, length=0.1)
    rep = verify_conditions(chart)
    assert rep.suite == "R2" and rep.ok
    assert rep.details["critical"] == "saddle"


def test_r2_third_derivative_violation():
    with pytest.raises(GenericityError):
        canonical_curve(Ars.f_chart("exp(x^2*(1 - 2*y^2 + 0.3*y^3)/2)"), (0.0, 0.0), length=0.1)


def test_degenerate_and_unknown_kinds():
    with pytest.raises(NormalFormError):
        canonical_curve(Ars.f_chart("x^3"), (0.0, 0.0))
    chart = canonical_chart(Ars.f_chart("x + 1"), (0.0, 0.0), GRID[:3], GRID[:3])
    with pytest.raises(KindMismatchError):
        verify_conditions(chart, kind="Elsewhere")


def test_transform_is_isometry():
    ars = Ars.f_chart("x + 1")
    new = transform_structure(ars, *PSI)
    u = np.array([0.07, -0.04])
    q = np.array([u[0] + 0.1 * u[1] ** 2, u[1] + 0.05 * u[0] * u[1]])
    assert gauss_curvature(new, u) == pytest.approx(gauss_curvature(ars, q), rel=1e-10)
    assert np.allclose(invert_point(*PSI, q), u, atol=1e-13)


@pytest.mark.parametrize("f", ["x + 1", "x"])
def test_invariant_survives_diffeomorphism(f):
    ars = Ars.f_chart(f)
    new = transform_structure(ars, *PSI)
    a = canonical_chart(ars, (0.0, 0.0), GRID, GRID)
    b = canonical_chart(new, (0.0, 0.0), GRID, GRID)
    assert a.point_kind.kind == b.point_kind.kind
    assert np.max(np.abs(a.f_tilde - b.f_tilde)) <= 1e-6


@settings(max_examples=6, deadline=None)
@given(c=st.floats(0.5, 3.0), k=st.floats(-0.3, 0.3))
def test_r1_invariant_of_linear_family(c, k):
    # the canonical R1 chart normalizes f~ = 1 on the curve and must not fold nearby
    ars = Ars.f_chart(f"{c}*(x + 1) + {k}*y")
    g = np.linspace(-0.05, 0.05, 5)
    chart = canonical_chart(ars, (0.0, 0.0), g, g, length=0.1)
    assert chart.f_tilde[2, 2] == pytest.approx(1.0, abs=1e-8)
    assert np.all(chart.det_DE > 0)
    assert math.isfinite(float(np.max(chart.f_tilde)))
