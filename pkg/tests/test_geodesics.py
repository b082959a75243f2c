import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ars2.frames import Ars
from ars2.geodesics import (FlowError, GeodesicState, flow_batch, flow_geodesic, hamiltonian,
                            hamiltonian_vector_field, track_hamiltonian, transversal_covector,
                            variational_flow, z_covectors)


def grushin_exact(px0, c, t):
    """Geodesic of H = (p_x^2 + x^2 p_y^2)/2 from the origin with p = (px0, c), c != 0."""
    x = px0 / c * np.sin(c * t)
    y = px0 ** 2 / c * (t / 2 - np.sin(2 * c * t) / (4 * c))
    return x, y


def test_flat_geodesic_is_straight():
    g = flow_geodesic(Ars.f_chart("1"), GeodesicState(0.1, -0.2, 0.6, 0.8), 2.0)
    assert np.allclose(g.states[0], 0.1 + 0.6 * g.t, atol=1e-12)
    assert np.allclose(g.states[1], -0.2 + 0.8 * g.t, atol=1e-12)


@pytest.mark.parametrize("px0,c", [(1.0, 0.4), (-1.0, 1.3), (1.0, -2.5)])
def test_grushin_closed_form(px0, c):
    # H = px^2/2 at x = 0, so px0 = +-1 and any c gives unit speed
    g = flow_geodesic(Ars.f_chart("x"), GeodesicState(0.0, 0.0, px0, c), 3.0)
    x, y = grushin_exact(px0, c, g.t)
    assert np.max(np.abs(g.states[0] - x)) < 1e-10
    assert np.max(np.abs(g.states[1] - y)) < 1e-10
    assert np.max(np.abs(g.H - 0.5)) < 1e-10


def test_backward_flow_returns():
    ars = Ars.f_chart("y - x^2*(1+x)")
    z = np.array([0.1, -0.2, 0.5, 1.0])
    z[2:] /= np.sqrt(2 * hamiltonian(ars, z))
    s0 = GeodesicState.from_array(z)
    fwd = flow_geodesic(ars, s0, 0.7)
    back = flow_geodesic(ars, fwd.states[:, -1], -0.7)
    assert np.allclose(back.states[:, -1], s0.as_array(), atol=1e-10)


def test_linearization_matches_finite_differences():
    ars = Ars.f_chart("exp(x*y) + x^2 - 0.5")
    z = np.array([[0.2, -0.1, 0.7, -0.4], [0.5, 0.3, -0.2, 1.1]]).T
    _, J = hamiltonian_vector_field(ars, z, with_linearization=True)
    h = 1e-6
    for k in range(4):
        e = np.zeros((4, 1))
        e[k] = h
        fd = (hamiltonian_vector_field(ars, z + e) - hamiltonian_vector_field(ars, z - e)) / (2 * h)
        assert np.allclose(J[:, k], fd, atol=1e-7)


def test_variational_columns_match_finite_difference_of_flows():
    ars = Ars.f_chart("x + 1 + 0.3*y^2")
    z0 = np.array([0.0, 0.1, 1.0, 0.0])
    dz = np.array([0.0, 1.0, 0.0, 0.0])
    vf = variational_flow(ars, z0, dz, 1.0, n_samples=11)
    h = 1e-6
    a = flow_geodesic(ars, z0 + h * dz, 1.0, n_samples=11).states
    b = flow_geodesic(ars, z0 - h * dz, 1.0, n_samples=11).states
    assert np.allclose(vf.columns[:2, 1], (a[:2] - b[:2]) / (2 * h), atol=1e-7)


def test_transversal_covector_properties():
    ars = Ars.f_chart("x + 2")
    s = transversal_covector(ars, (0.3, 0.1), (0.0, 1.0))
    p = np.array([s.px, s.py])
    assert abs(p @ [0.0, 1.0]) < 1e-15
    assert hamiltonian(ars, s.as_array()) == pytest.approx(0.5, abs=1e-15)
    other = transversal_covector(ars, (0.3, 0.1), (0.0, 1.0), side=-1)
    assert np.allclose(other.as_array()[2:], -p)


def test_z_covectors_choose_side():
    ars = Ars.f_chart("y - x^2")
    pts = np.array([[0.1, 0.2], [0.01, 0.04]])
    tans = np.array([[1.0, 1.0], [0.2, 0.4]])
    for side in (1, -1):
        z = z_covectors(ars, pts, tans, side)
        after = flow_batch(ars, z, np.full(2, 1e-3)).at(1.0)[0]
        assert np.all(np.sign(ars.det(after[0], after[1])) == side)


def test_z_covectors_reject_tangent_launch():
    # at the tangency point the only transversal covector launches along Z
    ars = Ars.f_chart("y - x^2")
    with pytest.raises(FlowError):
        z_covectors(ars, np.array([[0.0], [0.0]]), np.array([[0.0], [1.0]]), 1)


def test_track_hamiltonian_logs_runs():
    ars = Ars.f_chart("x")
    with track_hamiltonian() as log:
        flow_geodesic(ars, GeodesicState(0.0, 0.0, 1.0, 0.8), 1.0)
        flow_geodesic(ars, GeodesicState(0.0, 0.0, -1.0, 0.6), 1.0)
    assert len(log) == 2
    assert all(e["dev_half"] <= 1e-9 for e in log)


def test_grushin_conjugate_time():
    # from the origin, the family p = (1, c) has its first conjugate time at
    # t c = 4.4934 (the first positive root of tan u = u)
    c = 0.8
    ars = Ars.f_chart("x")
    z0 = np.array([0.0, 0.0, 1.0, c])
    dz = np.array([0.0, 0.0, 0.0, 1.0])
    vf = variational_flow(ars, z0, dz, 7.0 / c, n_samples=4001)
    tc = vf.first_sign_change()
    assert tc * c == pytest.approx(4.4934, abs=5e-3)


_q = st.floats(-0.4, 0.4)


@settings(max_examples=25, deadline=None)
@given(x=_q, y=_q, th=st.floats(0, 2 * np.pi), T=st.floats(0.1, 1.5))
def test_hamiltonian_conserved(x, y, th, T):
    ars = Ars.f_chart("1 + x^2 + 0.5*sin(y)")
    p = np.array([np.cos(th), np.sin(th)])
    z = np.r_[x, y, p]
    z[2:] /= np.sqrt(2 * hamiltonian(ars, z))
    g = flow_geodesic(ars, z, T, n_samples=21)
    assert np.max(np.abs(g.H - 0.5)) <= 1e-9
