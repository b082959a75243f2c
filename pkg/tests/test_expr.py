import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ars2 import expr
from ars2.expr import (
    ExprDomainError,
    ExprSyntaxError,
    JetOrderError,
    NonIntegerExponentError,
    UnknownIdentifierError,
    parse_field,
    taylor_jet,
)


def test_parse_simple_tree():
    f = parse_field("y - x^2")
    assert f.ast == expr.Sub(expr.Var("y"), expr.Pow(expr.Var("x"), 2))


def test_double_star_rejected_at_offset_3():
    with pytest.raises(ExprSyntaxError) as info:
        parse_field("x ** 2")
    assert info.value.offset == 3


def test_error_kinds():
    with pytest.raises(UnknownIdentifierError):
        parse_field("x + z")
    with pytest.raises(NonIntegerExponentError):
        parse_field("x^1.5")
    with pytest.raises(ExprSyntaxError):
        parse_field("sin(x")
    # offsets count bytes, not characters
    with pytest.raises(ExprSyntaxError) as info:
        parse_field("x + é")
    assert info.value.offset == 4


def test_bilinear_jet():
    j = taylor_jet(parse_field("x*y"), (2.0, 3.0), 2)
    want = {(0, 0): 6, (1, 0): 3, (0, 1): 2, (1, 1): 1, (2, 0): 0, (0, 2): 0}
    for (i, k), v in want.items():
        assert j.coeff(i, k) == v


def test_exp_series():
    j = taylor_jet("exp(x)", (0.0, 0.0), 3)
    for i in range(4):
        assert j.coeff(i, 0) == pytest.approx(1 / math.factorial(i), abs=1e-15)
        if i:
            assert j.coeff(0, i) == 0


def test_cubic_parabola_field():
    j = taylor_jet(parse_field("(y - x^2*(1 + x))"), (0.0, 0.0), 3)
    nonzero = {(0, 1): 1.0, (2, 0): -1.0, (3, 0): -1.0}
    for d in range(4):
        for i in range(d + 1):
            assert j.coeff(i, d - i) == nonzero.get((i, d - i), 0.0)
    # cross-check against finite differences of plain evaluation
    f = parse_field("y - x^2*(1 + x)")
    h = 1e-3
    fxx = (f(h, 0) - 2 * f(0, 0) + f(-h, 0)) / h**2
    assert fxx == pytest.approx(2 * j.coeff(2, 0), abs=1e-5)


def test_order_zero_is_plain_evaluation():
    f = parse_field("exp(sin(x)*y)/sqrt(1 + x^2) - log(2 + cos(y))")
    xs = np.linspace(-1, 1, 7)
    ys = np.linspace(-0.5, 2, 7)
    plain = f(xs, ys)
    assert np.array_equal(taylor_jet(f, (xs, ys), 0).coeffs[0], plain)


def test_domain_errors_and_nan_policy():
    with pytest.raises(ExprDomainError):
        parse_field("log(x)")(-1.0, 0.0)
    with pytest.raises(ExprDomainError):
        parse_field("1/x")(0.0, 0.0)
    with pytest.raises(ExprDomainError):
        parse_field("sqrt(x - 1)")(0.0, 0.0)
    with expr.domain_policy("nan"):
        v = parse_field("log(x)")(np.array([-1.0, 1.0]), np.zeros(2))
    assert np.isnan(v[0]) and v[1] == 0.0


def test_order_cap():
    with pytest.raises(JetOrderError):
        taylor_jet("x", (0, 0), 13)
    assert taylor_jet("x", (0, 0), 14, max_order=14).order == 14


def test_coefficient_count():
    for n in range(8):
        assert taylor_jet("x*y + 1", (0.3, 0.1), n).coeffs.shape == ((n + 1) * (n + 2) // 2,)


# --- brute force polynomial oracle ---------------------------------------------

def _poly_mul(p, q):
    out = {}
    for (a, b), u in p.items():
        for (c, d), v in q.items():
            out[(a + c, b + d)] = out.get((a + c, b + d), 0.0) + u * v
    return out


def _poly_text(p):
    return " + ".join(f"({c!r})*x^{i}*y^{j}" for (i, j), c in p.items())


def _shifted_coeff(p, i, j, x0, y0):
    """Coefficient of (x-x0)^i (y-y0)^j in the polynomial p."""
    s = 0.0
    for (k, l), c in p.items():
        if k >= i and l >= j:
            s += c * math.comb(k, i) * math.comb(l, j) * x0 ** (k - i) * y0 ** (l - j)
    return s


def _random_poly(rng, deg):
    return {(i, d - i): rng.uniform(-2, 2) for d in range(deg + 1) for i in range(d + 1)
            if rng.random() < 0.7}


def test_polynomial_jets_match_oracle():
    rng = np.random.default_rng(7)
    for _ in range(200):
        d1 = int(rng.integers(0, 3))
        d2 = int(rng.integers(0, 6 - d1))
        p, q = _random_poly(rng, d1) or {(0, 0): 1.0}, _random_poly(rng, d2) or {(0, 0): 1.0}
        r = _random_poly(rng, 5)
        text = f"({_poly_text(p)})*({_poly_text(q)})"
        if r:
            text += f" - ({_poly_text(r)})"
        oracle = _poly_mul(p, q)
        for k, v in r.items():
            oracle[k] = oracle.get(k, 0.0) - v
        x0, y0 = rng.uniform(-1.5, 1.5, 2)
        j = taylor_jet(parse_field(text), (x0, y0), 5)
        scale = max(1.0, max(abs(_shifted_coeff(oracle, i, k, x0, y0))
                             for i in range(6) for k in range(6 - i)))
        for i in range(6):
            for k in range(6 - i):
                want = _shifted_coeff(oracle, i, k, x0, y0)
                assert abs(j.coeff(i, k) - want) <= 1e-12 * scale


def test_product_is_truncated_cauchy_product():
    rng = np.random.default_rng(3)
    N = 6
    for _ in range(20):
        a = expr.Jet2(rng.normal(size=expr.n_coeffs(N)), N)
        b = expr.Jet2(rng.normal(size=expr.n_coeffs(N)), N)
        ta, tb = a.triangle(), b.triangle()
        want = np.zeros((N + 1, N + 1))
        for i in range(N + 1):
            for k in range(N + 1 - i):
                for p in range(i + 1):
                    for q in range(k + 1):
                        want[i, k] += ta[p, q] * tb[i - p, k - q]
        assert np.allclose((a * b).triangle(), want, atol=1e-12, rtol=0)


def test_transcendental_jets_match_finite_differences():
    f = parse_field("exp(x*y) * sin(x - y^2) + sqrt(2 + cos(x)) / log(3 + y)")
    x0, y0 = 0.4, -0.3
    j = taylor_jet(f, (x0, y0), 2)
    errs = []
    for h in (1e-2, 5e-3):
        fx = (f(x0 + h, y0) - f(x0 - h, y0)) / (2 * h)
        fxy = (f(x0 + h, y0 + h) - f(x0 + h, y0 - h) - f(x0 - h, y0 + h) + f(x0 - h, y0 - h)) / (4 * h * h)
        errs.append((abs(fx - j.derivative(1, 0)), abs(fxy - j.derivative(1, 1))))
    # O(h^2): halving h divides the error by about four
    for e_big, e_small in zip(*errs):
        assert e_small < 0.35 * e_big + 1e-9


def test_batched_jets_match_pointwise():
    f = parse_field("x^3*y - exp(y)/(2 + x)")
    xs, ys = np.array([0.1, -0.4, 1.2]), np.array([0.5, 0.0, -1.0])
    jb = taylor_jet(f, (xs, ys), 4)
    for k in range(3):
        assert np.allclose(jb.coeffs[:, k], taylor_jet(f, (xs[k], ys[k]), 4).coeffs, rtol=1e-14, atol=1e-15)


def test_jet_unary_identities():
    c = (0.3, 0.7)
    g = taylor_jet("x*y + 0.5", c, 6)
    assert np.allclose((expr.exp(expr.log(g))).coeffs, g.coeffs, atol=1e-13)
    assert np.allclose((expr.sqrt(g) * expr.sqrt(g)).coeffs, g.coeffs, atol=1e-13)
    one = expr.sin(g) ** 2 + expr.cos(g) ** 2
    assert np.allclose(one.coeffs, np.r_[1.0, np.zeros(expr.n_coeffs(6) - 1)], atol=1e-13)
    assert np.allclose((g * expr.reciprocal(g)).coeffs[1:], 0, atol=1e-12)


def test_substitute():
    f = parse_field("x^2 + y")
    g = f.substitute(x=parse_field("x + y"), y=parse_field("2*x"))
    assert g(1.0, 2.0) == pytest.approx(11.0)


# --- round trip ----------------------------------------------------------------

_atoms = st.one_of(
    st.sampled_from(["x", "y"]).map(expr.Var),
    st.floats(0, 1e6, allow_nan=False).map(expr.Const),
)


def _extend(children):
    return st.one_of(
        children.map(expr.Neg),
        st.tuples(st.sampled_from([expr.Add, expr.Sub, expr.Mul, expr.Div]), children, children)
        .map(lambda t: t[0](t[1], t[2])),
        st.tuples(children, st.integers(-4, 6)).map(lambda t: expr.Pow(*t)),
        st.tuples(st.sampled_from(expr.FUNCTIONS), children).map(lambda t: expr.Call(*t)),
    )


@settings(max_examples=300, deadline=None)
@given(st.recursive(_atoms, _extend, max_leaves=12))
def test_pretty_print_round_trip(tree):
    text = expr.to_text(tree)
    assert parse_field(text).ast == tree
