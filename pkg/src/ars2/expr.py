"""Scalar field expressions over (x, y) and truncated bivariate Taylor jets.

The grammar is deliberately small::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := atom ('^' ['-'] INT)?
    atom    := NUMBER | 'x' | 'y' | FUNC '(' expr ')' | '(' expr ')'
    FUNC    := exp | log | sin | cos | sqrt

Exponents must be integer literals, so powers of jets reduce to products.
"""

from __future__ import annotations

import contextlib
import contextvars
import functools
import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

MAX_ORDER = 12
FUNCTIONS = ("exp", "log", "sin", "cos", "sqrt")
VARIABLES = ("x", "y")


class ExprError(ValueError):
    """Base class for expression errors."""


class ExprSyntaxError(ExprError):
    def __init__(self, message, offset):
        super().__init__(f"{message} at byte offset {offset}")
        self.offset = offset


class UnknownIdentifierError(ExprSyntaxError):
    def __init__(self, name, offset):
        ExprError.__init__(self, f"unknown identifier {name!r} at byte offset {offset}")
        self.name = name
        self.offset = offset


class NonIntegerExponentError(ExprSyntaxError):
    pass


class ExprDomainError(ExprError, ArithmeticError):
    """log/sqrt of a non-positive argument or division by zero."""


class JetOrderError(ExprError):
    pass


# --- AST -------------------------------------------------------------------

@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class Add:
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Sub:
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Mul:
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Div:
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: int


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Const, Var, Neg, Add, Sub, Mul, Div, Pow, Call]

_PREC = {Add: 1, Sub: 1, Mul: 2, Div: 2, Neg: 3, Pow: 4}
_OPS = {Add: "+", Sub: "-", Mul: "*", Div: "/"}


def _prec(node):
    return _PREC.get(type(node), 5)


def to_text(node: Node) -> str:
    """Pretty-print with the minimal parentheses needed to reparse the same tree."""
    if isinstance(node, Const):
        v = node.value
        if v >= 0 and float(v).is_integer() and v < 1e15:
            return str(int(v))
        return repr(float(v))
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({to_text(node.arg)})"
    if isinstance(node, Neg):
        inner = to_text(node.arg)
        return "-" + (inner if _prec(node.arg) >= 3 else f"({inner})")
    if isinstance(node, Pow):
        base = to_text(node.base)
        if _prec(node.base) <= 4:
            base = f"({base})"
        return f"{base}^{node.exponent}"
    p = _prec(node)
    left = to_text(node.left)
    right = to_text(node.right)
    if _prec(node.left) < p:
        left = f"({left})"
    if _prec(node.right) <= p:
        right = f"({right})"
    sep = " " if p == 1 else ""
    return f"{left}{sep}{_OPS[type(node)]}{sep}{right}"


# --- parser ----------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


class _Parser:
    def __init__(self, text):
        self.text = text
        self.tokens = []
        pos = 0
        n = len(text)
        while True:
            while pos < n and text[pos].isspace():
                pos += 1
            if pos >= n:
                break
            m = _TOKEN.match(text, pos)
            if m is None or m.end() == pos:
                raise ExprSyntaxError(f"unexpected character {text[pos]!r}", self._bytes(pos))
            start = m.start(m.lastgroup)
            self.tokens.append((m.lastgroup, m.group(m.lastgroup), start))
            pos = m.end()
        self.tokens.append(("end", "", n))
        self.i = 0

    def _bytes(self, pos):
        return len(self.text[:pos].encode("utf-8"))

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, tok, what=None):
        kind, val, pos = tok
        if what is None:
            what = "unexpected end of input" if kind == "end" else f"unexpected token {val!r}"
        raise ExprSyntaxError(what, self._bytes(pos))

    def parse(self):
        node = self.expr()
        if self.peek()[0] != "end":
            self.fail(self.peek())
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.term()
            node = Add(node, rhs) if op == "+" else Sub(node, rhs)
        return node

    def term(self):
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            rhs = self.unary()
            node = Mul(node, rhs) if op == "*" else Div(node, rhs)
        return node

    def unary(self):
        if self.peek()[0] == "op" and self.peek()[1] == "-":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "^":
            self.take()
            sign = 1
            if self.peek()[0] == "op" and self.peek()[1] == "-":
                self.take()
                sign = -1
            kind, val, pos = self.peek()
            if kind != "num":
                if kind == "end":
                    self.fail(self.peek())
                raise NonIntegerExponentError("exponent must be an integer literal", self._bytes(pos))
            if not re.fullmatch(r"\d+", val):
                raise NonIntegerExponentError(f"non-integer exponent {val!r}", self._bytes(pos))
            self.take()
            return Pow(base, sign * int(val))
        return base

    def atom(self):
        tok = self.take()
        kind, val, pos = tok
        if kind == "num":
            return Const(float(val))
        if kind == "name":
            if val in VARIABLES:
                return Var(val)
            if val in FUNCTIONS:
                nxt = self.take()
                if nxt[1] != "(" or nxt[0] != "op":
                    self.fail(nxt, f"expected '(' after {val}")
                arg = self.expr()
                close = self.take()
                if close[1] != ")":
                    self.fail(close, "expected ')'")
                return Call(val, arg)
            raise UnknownIdentifierError(val, self._bytes(pos))
        if kind == "op" and val == "(":
            node = self.expr()
            close = self.take()
            if close[1] != ")":
                self.fail(close, "expected ')'")
            return node
        self.fail(tok)


# --- domain error policy -----------------------------------------------------

_DOMAIN_POLICY = contextvars.ContextVar("ars2_domain_policy", default="raise")


@contextlib.contextmanager
def domain_policy(policy: str):
    """Within the block, domain errors either raise (default) or produce NaN."""
    if policy not in ("raise", "nan"):
        raise ValueError("policy must be 'raise' or 'nan'")
    token = _DOMAIN_POLICY.set(policy)
    try:
        yield
    finally:
        _DOMAIN_POLICY.reset(token)


def _check_domain(bad, what):
    bad = np.asarray(bad)
    if bad.any():
        if _DOMAIN_POLICY.get() == "raise":
            raise ExprDomainError(what)
        return True
    return False


# --- jets --------------------------------------------------------------------

def n_coeffs(order: int) -> int:
    return (order + 1) * (order + 2) // 2


def index(i: int, j: int) -> int:
    """Position of the x^i y^j coefficient in graded order."""
    d = i + j
    return d * (d + 1) // 2 + j


@functools.lru_cache(maxsize=None)
def _layout(order):
    pairs = [(d - j, j) for d in range(order + 1) for j in range(d + 1)]
    P, Q, R = [], [], []
    for p, (i, j) in enumerate(pairs):
        for k in range(i + 1):
            for l in range(j + 1):
                P.append(p)
                Q.append(index(k, l))
                R.append(index(i - k, j - l))
    P = np.array(P)
    starts = np.flatnonzero(np.r_[True, np.diff(P) != 0])
    dx_src, dx_fac, dy_src, dy_fac = [], [], [], []
    for (i, j) in pairs:
        if i + j < order:
            dx_src.append(index(i + 1, j))
            dx_fac.append(i + 1.0)
            dy_src.append(index(i, j + 1))
            dy_fac.append(j + 1.0)
    return (np.array(Q), np.array(R), starts, np.array(dx_src, dtype=int),
            np.array(dx_fac), np.array(dy_src, dtype=int), np.array(dy_fac))


def _bcast(vec, ndim):
    return vec.reshape(vec.shape + (1,) * ndim)


class Jet2:
    """Truncated Taylor polynomial sum c[i,j] (x-x0)^i (y-y0)^j, i+j <= order.

    Coefficients are stored flat in graded order with shape (n_coeffs, *batch),
    so one Jet2 can carry jets at many centers at once.
    """

    __slots__ = ("order", "coeffs", "center")

    def __init__(self, coeffs, order, center=None):
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape[0] != n_coeffs(order):
            raise ValueError("coefficient count does not match order")
        self.coeffs = coeffs
        self.order = order
        self.center = center

    # construction
    @classmethod
    def constant(cls, value, order, center=None):
        value = np.asarray(value, dtype=float)
        c = np.zeros((n_coeffs(order),) + value.shape)
        c[0] = value
        return cls(c, order, center)

    @classmethod
    def variable(cls, name, center, order):
        x0, y0 = np.broadcast_arrays(np.asarray(center[0], float), np.asarray(center[1], float))
        c = np.zeros((n_coeffs(order),) + x0.shape)
        c[0] = x0 if name == "x" else y0
        if order >= 1:
            c[index(1, 0) if name == "x" else index(0, 1)] = 1.0
        return cls(c, order, (x0, y0))

    # access
    @property
    def value(self):
        return self.coeffs[0]

    @property
    def batch_shape(self):
        return self.coeffs.shape[1:]

    def coeff(self, i, j):
        if i + j > self.order:
            raise JetOrderError(f"coefficient ({i},{j}) exceeds jet order {self.order}")
        return self.coeffs[index(i, j)]

    def derivative(self, i, j):
        """Partial derivative d^{i+j}/dx^i dy^j at the center."""
        return self.coeff(i, j) * (math.factorial(i) * math.factorial(j))

    def triangle(self):
        """Coefficients as a dense (N+1, N+1, *batch) array, zero above the anti-diagonal."""
        N = self.order
        out = np.zeros((N + 1, N + 1) + self.batch_shape)
        for i in range(N + 1):
            for j in range(N + 1 - i):
                out[i, j] = self.coeffs[index(i, j)]
        return out

    def truncate(self, order):
        if order > self.order:
            raise JetOrderError("cannot raise the order of a jet")
        return Jet2(self.coeffs[: n_coeffs(order)], order, self.center)

    def dx(self):
        src, fac = _layout(self.order)[3:5]
        return Jet2(self.coeffs[src] * _bcast(fac, len(self.batch_shape)), self.order - 1, self.center)

    def dy(self):
        src, fac = _layout(self.order)[5:7]
        return Jet2(self.coeffs[src] * _bcast(fac, len(self.batch_shape)), self.order - 1, self.center)

    def __getitem__(self, key):
        return Jet2(self.coeffs[(slice(None),) + (key if isinstance(key, tuple) else (key,))],
                    self.order, None)

    # arithmetic
    def _coerce(self, other):
        if isinstance(other, Jet2):
            if other.order == self.order:
                return self, other
            n = min(self.order, other.order)
            return self.truncate(n), other.truncate(n)
        return self, Jet2.constant(other, self.order, self.center)

    def _aligned(self, other):
        """Both operands truncated to a common order with broadcast-compatible batch axes."""
        a, b = self._coerce(other)
        sa, sb = a.batch_shape, b.batch_shape
        if sa == sb:
            return a, b
        shape = np.broadcast_shapes(sa, sb)
        lift = lambda j, s: np.broadcast_to(
            j.coeffs.reshape(j.coeffs.shape[:1] + (1,) * (len(shape) - len(s)) + s),
            j.coeffs.shape[:1] + shape)
        return Jet2(lift(a, sa), a.order, a.center), Jet2(lift(b, sb), b.order, b.center)

    def __add__(self, other):
        if not isinstance(other, Jet2):
            shape = np.broadcast_shapes(self.batch_shape, np.shape(other))
            c = np.broadcast_to(self.coeffs, self.coeffs.shape[:1] + shape).copy()
            c[0] += other
            return Jet2(c, self.order, self.center)
        a, b = self._aligned(other)
        return Jet2(a.coeffs + b.coeffs, a.order, a.center)

    __radd__ = __add__

    def __neg__(self):
        return Jet2(-self.coeffs, self.order, self.center)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet2):
            other = np.asarray(other, dtype=float)
            return Jet2(self.coeffs * other, self.order, self.center)
        a, b = self._aligned(other)
        Q, R, starts = _layout(a.order)[:3]
        prod = a.coeffs[Q] * b.coeffs[R]
        return Jet2(np.add.reduceat(prod, starts, axis=0), a.order, a.center)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet2):
            other = np.asarray(other, dtype=float)
            if _check_domain(other == 0, "division by zero"):
                with np.errstate(divide="ignore", invalid="ignore"):
                    return Jet2(self.coeffs / other, self.order, self.center)
            return Jet2(self.coeffs / other, self.order, self.center)
        return self * reciprocal(other)

    def __rtruediv__(self, other):
        return reciprocal(self) * other

    def __pow__(self, n):
        if not isinstance(n, (int, np.integer)):
            raise NonIntegerExponentError("jet powers must be integers", 0)
        n = int(n)
        if n < 0:
            return reciprocal(self) ** (-n)
        result = Jet2.constant(np.ones(self.batch_shape), self.order, self.center)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def __repr__(self):
        return f"Jet2(order={self.order}, batch={self.batch_shape})"


def compose(jet: Jet2, derivs) -> Jet2:
    """Compose a univariate function with a jet, given g^{(k)}(value)/k! for k=0..N."""
    N = jet.order
    t = Jet2(jet.coeffs.copy(), N, jet.center)
    t.coeffs[0] = 0.0
    shape = np.broadcast_shapes(jet.batch_shape, *(np.shape(d) for d in derivs))
    result = Jet2.constant(np.broadcast_to(derivs[N], shape), N, jet.center)
    for k in range(N - 1, -1, -1):
        result = t * result
        result.coeffs[0] += derivs[k]
    return result


def _taylor_derivs(func, v, N):
    """Normalized derivatives g^{(k)}(v)/k!, k=0..N, for the supported unary functions."""
    out = []
    if func == "exp":
        e = np.exp(v)
        return [e / math.factorial(k) for k in range(N + 1)]
    if func == "log":
        out.append(np.log(v))
        for k in range(1, N + 1):
            out.append((-1.0) ** (k + 1) / (k * v ** k))
        return out
    if func == "sqrt":
        s = np.sqrt(v)
        coef = 1.0
        for k in range(N + 1):
            out.append(coef * s / v ** k)
            coef *= (0.5 - k) / (k + 1)
        return out
    if func == "inv":
        return [(-1.0) ** k / v ** (k + 1) for k in range(N + 1)]
    if func in ("sin", "cos"):
        s, c = np.sin(v), np.cos(v)
        cyc = [s, c, -s, -c] if func == "sin" else [c, -s, -c, s]
        return [cyc[k % 4] / math.factorial(k) for k in range(N + 1)]
    raise ValueError(func)


def _unary(func, jet: Jet2) -> Jet2:
    v = jet.value
    if func in ("log",):
        bad = _check_domain(v <= 0, f"{func} of non-positive argument")
    elif func == "sqrt":
        bad = _check_domain(v < 0 if jet.order == 0 else v <= 0, "sqrt of negative argument")
    elif func == "inv":
        bad = _check_domain(v == 0, "division by zero")
    else:
        bad = False
    if bad:
        with np.errstate(all="ignore"):
            return compose(jet, _taylor_derivs(func, v, jet.order))
    return compose(jet, _taylor_derivs(func, v, jet.order))


def reciprocal(jet: Jet2) -> Jet2:
    return _unary("inv", jet)


def exp(j):
    return _unary("exp", j)


def log(j):
    return _unary("log", j)


def sin(j):
    return _unary("sin", j)


def cos(j):
    return _unary("cos", j)


def sqrt(j):
    return _unary("sqrt", j)


_UNARY = {"exp": exp, "log": log, "sin": sin, "cos": cos, "sqrt": sqrt}


# --- field expressions ---------------------------------------------------------

class FieldExpr:
    """A parsed scalar field over (x, y). Immutable."""

    __slots__ = ("ast", "source_text")

    def __init__(self, ast: Node, source_text: str | None = None):
        object.__setattr__(self, "ast", ast)
        object.__setattr__(self, "source_text", source_text if source_text is not None else to_text(ast))

    def __setattr__(self, key, value):
        raise AttributeError("FieldExpr is immutable")

    def __repr__(self):
        return f"FieldExpr({self.source_text!r})"

    def __str__(self):
        return to_text(self.ast)

    def __eq__(self, other):
        return isinstance(other, FieldExpr) and self.ast == other.ast

    def __hash__(self):
        return hash(self.ast)

    def jet(self, center, order):
        return taylor_jet(self, center, order)

    def __call__(self, x, y):
        return evaluate(self, x, y)

    def substitute(self, **mapping) -> "FieldExpr":
        """Replace variables by other expressions, e.g. f.substitute(x=g, y=h)."""
        nodes = {k: (v.ast if isinstance(v, FieldExpr) else v) for k, v in mapping.items()}
        return FieldExpr(substitute(self.ast, nodes))


def as_field(obj) -> FieldExpr:
    if isinstance(obj, FieldExpr):
        return obj
    if isinstance(obj, (int, float)):
        return FieldExpr(Const(float(obj)) if obj >= 0 else Neg(Const(float(-obj))))
    return parse_field(obj)


def parse_field(text) -> FieldExpr:
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    return FieldExpr(_Parser(text).parse(), text)


def substitute(node: Node, mapping: dict) -> Node:
    memo = {}

    def go(n):
        key = id(n)
        if key in memo:
            return memo[key]
        if isinstance(n, Var):
            r = mapping.get(n.name, n)
        elif isinstance(n, Const):
            r = n
        elif isinstance(n, Neg):
            r = Neg(go(n.arg))
        elif isinstance(n, Call):
            r = Call(n.func, go(n.arg))
        elif isinstance(n, Pow):
            r = Pow(go(n.base), n.exponent)
        else:
            r = type(n)(go(n.left), go(n.right))
        memo[key] = r
        return r

    return go(node)



def _is(node, v):
    return isinstance(node, Const) and node.value == v


def _add(a, b):
    if _is(a, 0):
        return b
    if _is(b, 0):
        return a
    return Add(a, b)


def _sub(a, b):
    if _is(b, 0):
        return a
    if _is(a, 0):
        return Neg(b)
    return Sub(a, b)


def _mul(a, b):
    if _is(a, 0) or _is(b, 0):
        return Const(0.0)
    if _is(a, 1):
        return b
    if _is(b, 1):
        return a
    return Mul(a, b)


def _d(node: Node, var: str) -> Node:
    """Symbolic partial derivative, dropping zero terms and unit factors."""
    zero = Const(0.0)
    if isinstance(node, Const):
        return zero
    if isinstance(node, Var):
        return Const(1.0) if node.name == var else zero
    if isinstance(node, Neg):
        du = _d(node.arg, var)
        return zero if _is(du, 0) else Neg(du)
    if isinstance(node, Add):
        return _add(_d(node.left, var), _d(node.right, var))
    if isinstance(node, Sub):
        return _sub(_d(node.left, var), _d(node.right, var))
    if isinstance(node, Mul):
        return _add(_mul(_d(node.left, var), node.right), _mul(node.left, _d(node.right, var)))
    if isinstance(node, Div):
        num = _sub(_mul(_d(node.left, var), node.right), _mul(node.left, _d(node.right, var)))
        return zero if _is(num, 0) else Div(num, Pow(node.right, 2))
    if isinstance(node, Pow):
        n = node.exponent
        if n == 0:
            return zero
        coef = Const(float(n)) if n > 0 else Neg(Const(float(-n)))
        power = node.base if n == 2 else Pow(node.base, n - 1)
        return _mul(_mul(coef, power), _d(node.base, var))
    u, du = node.arg, _d(node.arg, var)
    if _is(du, 0):
        return zero
    outer = {
        "exp": lambda: node,
        "log": lambda: Div(Const(1.0), u),
        "sqrt": lambda: Div(Const(1.0), Mul(Const(2.0), node)),
        "sin": lambda: Call("cos", u),
        "cos": lambda: Neg(Call("sin", u)),
    }[node.func]()
    return _mul(outer, du)


def diff(field, var: str) -> "FieldExpr":
    """Partial derivative of a field with respect to 'x' or 'y', as a new field."""
    if var not in ("x", "y"):
        raise ValueError("var must be 'x' or 'y'")
    return FieldExpr(_d(as_field(field).ast, var))

def _const_binop(node, a, b):
    if isinstance(node, Add):
        return a + b
    if isinstance(node, Sub):
        return a - b
    if isinstance(node, Mul):
        return a * b
    _check_domain(np.asarray(b) == 0, "division by zero")
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.divide(a, b)


def _jet_eval(node, center, order, memo):
    key = id(node)
    hit = memo.get(key)
    if hit is not None:
        return hit[1]
    if isinstance(node, Const):
        r = node.value
    elif isinstance(node, Var):
        r = Jet2.variable(node.name, center, order)
    elif isinstance(node, Neg):
        r = -_jet_eval(node.arg, center, order, memo)
    elif isinstance(node, Call):
        a = _jet_eval(node.arg, center, order, memo)
        if not isinstance(a, Jet2):
            a = Jet2.constant(a, order)
        r = _UNARY[node.func](a)
    elif isinstance(node, Pow):
        b = _jet_eval(node.base, center, order, memo)
        if not isinstance(b, Jet2):
            b = Jet2.constant(b, order)
        r = b ** node.exponent
    else:
        a = _jet_eval(node.left, center, order, memo)
        b = _jet_eval(node.right, center, order, memo)
        if not isinstance(a, Jet2) and not isinstance(b, Jet2):
            r = _const_binop(node, a, b)
            memo[key] = (node, r)
            return r
        if isinstance(node, Add):
            r = a + b if isinstance(a, Jet2) else b + a
        elif isinstance(node, Sub):
            r = a - b if isinstance(a, Jet2) else (-b) + a
        elif isinstance(node, Mul):
            r = a * b if isinstance(a, Jet2) else b * a
        else:
            r = a / b if isinstance(a, Jet2) else reciprocal(b) * a
    memo[key] = (node, r)  # keep node alive so ids stay unique
    return r


def taylor_jets(fields, center, order: int, max_order: int = MAX_ORDER):
    """Jets of several fields at the same center(s), sharing common subtrees."""
    if order < 0:
        raise JetOrderError("order must be non-negative")
    if order > max_order:
        raise JetOrderError(f"jet order {order} exceeds cap {max_order}")
    x0, y0 = np.broadcast_arrays(np.asarray(center[0], float), np.asarray(center[1], float))
    memo = {}
    out = []
    for f in fields:
        r = _jet_eval(as_field(f).ast, (x0, y0), order, memo)
        if not isinstance(r, Jet2):
            r = Jet2.constant(np.broadcast_to(r, x0.shape), order)
        elif r.batch_shape != x0.shape:
            r = Jet2(np.broadcast_to(r.coeffs, (r.coeffs.shape[0],) + x0.shape).copy(), order)
        r.center = (x0, y0)
        out.append(r)
    return out


def taylor_jet(field, center, order: int, max_order: int = MAX_ORDER) -> Jet2:
    return taylor_jets([field], center, order, max_order)[0]


def evaluate(field, x, y):
    """Plain evaluation; shares the jet code path at order 0."""
    v = taylor_jet(field, (x, y), 0).coeffs[0]
    return v if np.ndim(v) else float(v)
