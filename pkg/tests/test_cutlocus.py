import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ars2.cutlocus import (FitError, PointSource, ZSource, conjugate_check, cut_locus, fit_asymptote,
                           lower_window, propagate_front, segment_intersections, upper_window,
                           z_cut_branch)
from ars2.frames import Ars
from ars2.geodesics import track_hamiltonian
from ars2.jets import K


def _brute_force(P, Q):
    out = []
    for i in range(len(P) - 1):
        for j in range(len(Q) - 1):
            p, r = P[i], P[i + 1] - P[i]
            q, s = Q[j], Q[j + 1] - Q[j]
            den = r[0] * s[1] - r[1] * s[0]
            if den == 0:
                continue
            d = q - p
            u = (d[0] * s[1] - d[1] * s[0]) / den
            v = (d[0] * r[1] - d[1] * r[0]) / den
            if 0 <= u <= 1 and 0 <= v <= 1:
                out.append((i, j))
    return sorted(out)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10 ** 6), n=st.integers(3, 40), m=st.integers(3, 40))
def test_segment_intersections_match_brute_force(seed, n, m):
    rng = np.random.default_rng(seed)
    P = np.cumsum(rng.normal(size=(n, 2)) * 0.2, axis=0)
    Q = np.cumsum(rng.normal(size=(m, 2)) * 0.2, axis=0)
    got = sorted((h[0], h[2]) for h in segment_intersections(P, Q))
    assert got == _brute_force(P, Q)


def test_segment_intersections_skip_nan():
    P = np.array([[0.0, -1.0], [0.0, 1.0], [np.nan, np.nan]])
    Q = np.array([[-1.0, 0.0], [1.0, 0.0]])
    hits = segment_intersections(P, Q)
    assert len(hits) == 1 and np.allclose(hits[0][4], (0.0, 0.0))


def test_z_source_graph_and_tangent():
    src = ZSource(Ars.f_chart("y - x^2*(1+x)"))
    pts, tan = src.points(np.array([0.1, -0.2]))
    assert np.allclose(pts[1], pts[0] ** 2 * (1 + pts[0]), atol=1e-15)
    assert np.allclose(tan[1], 2 * pts[0] + 3 * pts[0] ** 2)
    vert = ZSource(Ars.f_chart("x - 0.1*y^2"), along="y")
    pts, tan = vert.points(np.array([0.5]))
    assert pts[0, 0] == pytest.approx(0.025) and tan[0, 0] == pytest.approx(0.1)


def test_symmetric_parabola_cut_on_axis():
    ars = Ars.f_chart("y - x^2")
    cl = z_cut_branch(ars, 1, (1e-3, 0.05), np.geomspace(3e-3, 0.03, 6), n_a=64)
    b = cl.branch("upper")
    assert len(b["a"]) == 6
    assert np.max(np.abs(b["x"])) < 1e-12
    assert np.allclose(b["a"], -b["a_bar"], rtol=1e-10)
    assert cl.conjugate_ok["upper"]


def test_vertical_grushin_line_has_no_cut():
    ars = Ars.f_chart("x")
    src = ZSource(ars, along="y")
    fp = propagate_front(ars, src, (1e-3, 0.5), 1, t_max=0.5, spacing="lin", n_a=64)
    fn = propagate_front(ars, src, (-0.5, -1e-3), 1, t_max=0.5, spacing="lin", n_a=64)
    assert cut_locus(ars, fp, fn, np.linspace(0.05, 0.5, 6)).is_empty()


def test_flat_point_source_has_no_cut():
    ars = Ars.f_chart("1")
    src = PointSource(ars, (0.0, 0.0))
    fp = propagate_front(ars, src, (0.05, 1.5), t_max=1.0, spacing="lin", n_a=64)
    fn = propagate_front(ars, src, (-1.5, -0.05), t_max=1.0, spacing="lin", n_a=64)
    assert cut_locus(ars, fp, fn, np.linspace(0.1, 1.0, 5)).is_empty()


def test_grushin_point_source_cut_closed_form():
    # geodesics (1, c) and (-1, c) from the origin meet on x = 0 at t = pi/c, y = t^2/(2 pi)
    ars = Ars.f_chart("x")
    src = PointSource(ars, (0.0, 0.0), math.pi / 2)
    fp = propagate_front(ars, src, (0.45, 1.3), t_max=3.2, n_a=96, spacing="lin")
    fn = propagate_front(ars, src, (-1.3, -0.45), t_max=3.2, n_a=96, spacing="lin")
    t = np.linspace(1.6, 3.0, 4)
    cl = cut_locus(ars, fp, fn, t, label="point")
    b = cl.branch("point")
    assert np.max(np.abs(b["x"])) < 1e-12
    assert np.allclose(b["y"], t ** 2 / (2 * math.pi), rtol=1e-10)
    assert np.allclose(1 / np.tan(b["a"]), math.pi / t, rtol=1e-10)
    assert cl.conjugate_ok["point"]


def test_conjugate_time_after_cut_on_lower_side():
    ars = Ars.f_chart("y - x^2*(1+x)")
    src = ZSource(ars)
    a = np.array([0.002, 0.01, -0.01])
    t_cut = 2 * K * np.sqrt(np.abs(a))
    ok, J, first = conjugate_check(ars, src, a, -1, 1.4 * t_cut)
    assert ok.all()
    ok, J, first = conjugate_check(ars, src, a, -1, 2.0 * t_cut)
    assert not ok.any()
    assert all(1.4 < f / t < 1.6 for f, t in zip(first, t_cut))


def test_windows():
    assert upper_window(-0.01) == pytest.approx(0.02)
    w = lower_window(1.0, 0.2)
    assert w(0.04) == pytest.approx(0.2 * (2 * K + 0.2))


def test_fit_models():
    u = np.geomspace(1e-4, 1e-2, 12)
    f = fit_asymptote(u, -0.5 * u * (1 + 0.01 * np.sin(u)), "line-through-origin")
    assert f.coefficient == pytest.approx(-0.5, rel=1e-3)
    g = fit_asymptote(u, -3 * u ** (2 / 3), "power-law")
    assert g.exponent == pytest.approx(2 / 3, abs=1e-12) and g.coefficient == pytest.approx(3)
    with pytest.raises(FitError):
        fit_asymptote(u[:5], u[:5])
    with pytest.raises(FitError):
        fit_asymptote(np.linspace(1, 2, 12), np.linspace(1, 2, 12))
    with pytest.raises(ValueError):
        fit_asymptote(u, u, "cubic")


def test_upper_branch_small_run_conserves_h():
    ars = Ars.f_chart("y - x^2*(1+x)")
    with track_hamiltonian() as log:
        cl = z_cut_branch(ars, 1, (5e-4, 0.02), np.geomspace(2e-3, 0.015, 5), n_a=64)
    b = cl.branch("upper")
    assert np.allclose(b["x"] / b["y"], -0.5, atol=0.02)
    assert max(e["dev_half"] for e in log) <= 1e-9
    assert np.all(b["residual"] < 1e-12)
