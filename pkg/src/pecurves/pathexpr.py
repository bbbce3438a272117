"""Path definitions: expression ASTs, symbolic derivatives, jets, grids.

Paths are given by closed-form coordinate expressions in the parameter
``t`` over a fixed function vocabulary (exp, log, sin, cos, tan, sinh,
cosh, tanh, sqrt, arithmetic, constant-exponent powers).  The vocabulary
is closed under differentiation, so every derivative a criterion needs
is again an expression that can be evaluated exactly; no finite
differences enter any decision.

Expressions are immutable.  Derivatives and compiled evaluators are
cached on the nodes; populating those caches is idempotent, so shared
paths are safe to use from several threads.
"""
from __future__ import annotations

import cmath
import math
import re
import threading
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import EvalDomainError, PathParseError, SignatureError
from .forms import FieldTag, Signature

UNARY_FUNCTIONS = ("exp", "log", "sin", "cos", "tan", "sinh", "cosh", "tanh", "sqrt")


# ---------------------------------------------------------------------------
# AST


class Expr:
    """Base expression node.  Nodes are immutable; build with the module
    constructors (or operator sugar), never mutate."""

    __slots__ = ("_deriv", "_fn_real", "_fn_complex")

    def __init__(self):
        self._deriv = None
        self._fn_real = None
        self._fn_complex = None

    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return sub(self, as_expr(other))

    def __rsub__(self, other):
        return sub(as_expr(other), self)

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, exponent):
        return powc(self, exponent)

    def __repr__(self):
        return f"<{type(self).__name__} {to_text(self)!r}>"


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value):
        super().__init__()
        self.value = complex(value) if isinstance(value, complex) else float(value)


class Var(Expr):
    __slots__ = ()


class Neg(Expr):
    __slots__ = ("arg",)

    def __init__(self, arg):
        super().__init__()
        self.arg = arg


class Call(Expr):
    __slots__ = ("fn", "arg")

    def __init__(self, fn, arg):
        super().__init__()
        if fn not in UNARY_FUNCTIONS:
            raise SignatureError(f"unsupported function {fn!r}")
        self.fn = fn
        self.arg = arg


class Add(Expr):
    __slots__ = ("lhs", "rhs")

    def __init__(self, lhs, rhs):
        super().__init__()
        self.lhs = lhs
        self.rhs = rhs


class Sub(Expr):
    __slots__ = ("lhs", "rhs")

    def __init__(self, lhs, rhs):
        super().__init__()
        self.lhs = lhs
        self.rhs = rhs


class Mul(Expr):
    __slots__ = ("lhs", "rhs")

    def __init__(self, lhs, rhs):
        super().__init__()
        self.lhs = lhs
        self.rhs = rhs


class Div(Expr):
    __slots__ = ("lhs", "rhs")

    def __init__(self, lhs, rhs):
        super().__init__()
        self.lhs = lhs
        self.rhs = rhs


class Pow(Expr):
    """base ** q with a fixed rational exponent q (kept exact as a
    Fraction so repeated differentiation stays in the vocabulary)."""

    __slots__ = ("base", "exponent")

    def __init__(self, base, exponent):
        super().__init__()
        self.base = base
        self.exponent = Fraction(exponent)


T = Var()


def as_expr(v) -> Expr:
    if isinstance(v, Expr):
        return v
    return Const(v)


def _is_const(e, value=None):
    if not isinstance(e, Const):
        return False
    return value is None or e.value == value


# Constructors fold constants (and the identities 0/1 force) but perform
# no other rewriting: correctness downstream is by evaluation, not by
# canonical form.


def add(a, b) -> Expr:
    a, b = as_expr(a), as_expr(b)
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    if _is_const(a, 0):
        return b
    if _is_const(b, 0):
        return a
    return Add(a, b)


def sub(a, b) -> Expr:
    a, b = as_expr(a), as_expr(b)
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    if _is_const(b, 0):
        return a
    if _is_const(a, 0):
        return neg(b)
    return Sub(a, b)


def mul(a, b) -> Expr:
    a, b = as_expr(a), as_expr(b)
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    if _is_const(a, 0) or _is_const(b, 0):
        return Const(0.0)
    if _is_const(a, 1):
        return b
    if _is_const(b, 1):
        return a
    return Mul(a, b)


def div(a, b) -> Expr:
    a, b = as_expr(a), as_expr(b)
    if isinstance(a, Const) and isinstance(b, Const) and b.value != 0:
        return Const(a.value / b.value)
    if _is_const(b, 1):
        return a
    return Div(a, b)


def neg(a) -> Expr:
    a = as_expr(a)
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def powc(base, exponent) -> Expr:
    base = as_expr(base)
    q = Fraction(exponent)
    if q == 0:
        return Const(1.0)
    if q == 1:
        return base
    if isinstance(base, Const):
        try:
            return Const(_pow_real(base.value, q) if not isinstance(base.value, complex)
                         else _pow_complex(base.value, q))
        except (ValueError, ZeroDivisionError, OverflowError):
            pass  # leave unfolded; evaluation will report the singularity
    return Pow(base, q)


def call(fn, arg) -> Expr:
    arg = as_expr(arg)
    if isinstance(arg, Const):
        impl = _REAL_FUNCS[fn] if not isinstance(arg.value, complex) else _COMPLEX_FUNCS[fn]
        try:
            return Const(impl(arg.value))
        except (ValueError, OverflowError):
            pass
    return Call(fn, arg)


# ---------------------------------------------------------------------------
# Differentiation


def differentiate(e: Expr) -> Expr:
    """Exact symbolic d/dt.  Cached per node; cheap to call repeatedly."""
    if e._deriv is not None:
        return e._deriv
    d = _diff(e)
    e._deriv = d
    return d


def _diff(e: Expr) -> Expr:
    if isinstance(e, Const):
        return Const(0.0)
    if isinstance(e, Var):
        return Const(1.0)
    if isinstance(e, Neg):
        return neg(differentiate(e.arg))
    if isinstance(e, Add):
        return add(differentiate(e.lhs), differentiate(e.rhs))
    if isinstance(e, Sub):
        return sub(differentiate(e.lhs), differentiate(e.rhs))
    if isinstance(e, Mul):
        return add(mul(differentiate(e.lhs), e.rhs), mul(e.lhs, differentiate(e.rhs)))
    if isinstance(e, Div):
        num = sub(mul(differentiate(e.lhs), e.rhs), mul(e.lhs, differentiate(e.rhs)))
        return div(num, powc(e.rhs, 2))
    if isinstance(e, Pow):
        q = e.exponent
        return mul(mul(Const(float(q)), powc(e.base, q - 1)), differentiate(e.base))
    if isinstance(e, Call):
        u, du = e.arg, differentiate(e.arg)
        rules = {
            "exp": lambda: mul(e, du),
            "log": lambda: div(du, u),
            "sin": lambda: mul(call("cos", u), du),
            "cos": lambda: neg(mul(call("sin", u), du)),
            "tan": lambda: mul(add(Const(1.0), powc(e, 2)), du),
            "sinh": lambda: mul(call("cosh", u), du),
            "cosh": lambda: mul(call("sinh", u), du),
            "tanh": lambda: mul(sub(Const(1.0), powc(e, 2)), du),
            "sqrt": lambda: div(du, mul(Const(2.0), e)),
        }
        return rules[e.fn]()
    raise TypeError(f"cannot differentiate {type(e).__name__}")


def substitute(e: Expr, replacement: Expr, _memo=None) -> Expr:
    """Replace the parameter variable by another expression (composition)."""
    if _memo is None:
        _memo = {}
    got = _memo.get(id(e))
    if got is not None:
        return got
    if isinstance(e, Var):
        out = replacement
    elif isinstance(e, Const):
        out = e
    elif isinstance(e, Neg):
        out = neg(substitute(e.arg, replacement, _memo))
    elif isinstance(e, Call):
        out = call(e.fn, substitute(e.arg, replacement, _memo))
    elif isinstance(e, Add):
        out = add(substitute(e.lhs, replacement, _memo), substitute(e.rhs, replacement, _memo))
    elif isinstance(e, Sub):
        out = sub(substitute(e.lhs, replacement, _memo), substitute(e.rhs, replacement, _memo))
    elif isinstance(e, Mul):
        out = mul(substitute(e.lhs, replacement, _memo), substitute(e.rhs, replacement, _memo))
    elif isinstance(e, Div):
        out = div(substitute(e.lhs, replacement, _memo), substitute(e.rhs, replacement, _memo))
    elif isinstance(e, Pow):
        out = powc(substitute(e.base, replacement, _memo), e.exponent)
    else:
        raise TypeError(f"cannot substitute into {type(e).__name__}")
    _memo[id(e)] = out
    return out


def conjugate_constants(e: Expr, _memo=None) -> Expr:
    """Expression whose value at real t is the complex conjugate of e(t).

    Works by conjugating every constant literal; all supported functions
    have real Taylor coefficients, so they commute with conjugation away
    from the log/sqrt branch cuts.
    """
    if _memo is None:
        _memo = {}
    got = _memo.get(id(e))
    if got is not None:
        return got
    if isinstance(e, Const):
        v = e.value
        out = Const(v.conjugate()) if isinstance(v, complex) else e
    elif isinstance(e, Var):
        out = e
    elif isinstance(e, Neg):
        out = neg(conjugate_constants(e.arg, _memo))
    elif isinstance(e, Call):
        out = call(e.fn, conjugate_constants(e.arg, _memo))
    elif isinstance(e, Add):
        out = add(conjugate_constants(e.lhs, _memo), conjugate_constants(e.rhs, _memo))
    elif isinstance(e, Sub):
        out = sub(conjugate_constants(e.lhs, _memo), conjugate_constants(e.rhs, _memo))
    elif isinstance(e, Mul):
        out = mul(conjugate_constants(e.lhs, _memo), conjugate_constants(e.rhs, _memo))
    elif isinstance(e, Div):
        out = div(conjugate_constants(e.lhs, _memo), conjugate_constants(e.rhs, _memo))
    elif isinstance(e, Pow):
        out = powc(conjugate_constants(e.base, _memo), e.exponent)
    else:
        raise TypeError(f"cannot conjugate {type(e).__name__}")
    _memo[id(e)] = out
    return out


# ---------------------------------------------------------------------------
# Evaluation (compiled)


def _pow_real(b, q):
    qf = float(q)
    if b < 0 and not qf.is_integer():
        raise ValueError(f"negative base {b!r} with fractional exponent {qf}")
    return b ** qf


def _pow_complex(b, q):
    return complex(b) ** float(q)


_REAL_FUNCS = {
    "exp": math.exp, "log": math.log, "sin": math.sin, "cos": math.cos,
    "tan": math.tan, "sinh": math.sinh, "cosh": math.cosh, "tanh": math.tanh,
    "sqrt": math.sqrt,
}
_COMPLEX_FUNCS = {
    "exp": cmath.exp, "log": cmath.log, "sin": cmath.sin, "cos": cmath.cos,
    "tan": cmath.tan, "sinh": cmath.sinh, "cosh": cmath.cosh, "tanh": cmath.tanh,
    "sqrt": cmath.sqrt,
}


def _codegen(e: Expr, field: FieldTag) -> str:
    """Emit a function body that evaluates the expression DAG with one
    local per distinct node (shared subtrees are computed once)."""
    names = {}
    lines = []

    def visit(node):
        key = id(node)
        if key in names:
            return names[key]
        if isinstance(node, Const):
            v = node.value
            if isinstance(v, complex):
                if field is FieldTag.REAL:
                    raise EvalDomainError("complex constant in a real-field expression")
                expr = repr(v)
            else:
                expr = repr(v) if field is FieldTag.REAL else repr(complex(v))
        elif isinstance(node, Var):
            expr = "t"
        elif isinstance(node, Neg):
            expr = f"-{visit(node.arg)}"
        elif isinstance(node, Add):
            expr = f"{visit(node.lhs)} + {visit(node.rhs)}"
        elif isinstance(node, Sub):
            expr = f"{visit(node.lhs)} - {visit(node.rhs)}"
        elif isinstance(node, Mul):
            expr = f"{visit(node.lhs)} * {visit(node.rhs)}"
        elif isinstance(node, Div):
            expr = f"{visit(node.lhs)} / {visit(node.rhs)}"
        elif isinstance(node, Pow):
            q = node.exponent
            if q.denominator == 1:
                expr = f"{visit(node.base)} ** {int(q)}"
            else:
                expr = f"_pw({visit(node.base)}, {float(q)!r})"
        elif isinstance(node, Call):
            expr = f"_{node.fn}({visit(node.arg)})"
        else:
            raise TypeError(f"cannot compile {type(node).__name__}")
        name = f"v{len(names)}"
        names[key] = name
        lines.append(f"    {name} = {expr}")
        return name

    result = visit(e)
    return "def _f(t):\n" + "\n".join(lines) + f"\n    return {result}\n"


def _compile(e: Expr, field: FieldTag):
    cached = e._fn_real if field is FieldTag.REAL else e._fn_complex
    if cached is not None:
        return cached
    funcs = _REAL_FUNCS if field is FieldTag.REAL else _COMPLEX_FUNCS
    ns = {f"_{name}": impl for name, impl in funcs.items()}
    ns["_pw"] = _pow_real if field is FieldTag.REAL else _pow_complex
    exec(compile(_codegen(e, field), "<pecurves-expr>", "exec"), ns)
    fn = ns["_f"]
    if field is FieldTag.REAL:
        e._fn_real = fn
    else:
        e._fn_complex = fn
    return fn


def eval_expr(e: Expr, t: float, field: FieldTag = FieldTag.REAL):
    """Evaluate at real t.  Real-field results stay real; singularities
    raise EvalDomainError instead of leaking inf/nan or complex values."""
    fn = _compile(e, field)
    try:
        return fn(float(t) if field is FieldTag.REAL else complex(t))
    except (ValueError, ZeroDivisionError, OverflowError) as exc:
        raise EvalDomainError(f"evaluation failed at t={t}: {exc}") from None


# ---------------------------------------------------------------------------
# Printing


_PREC_ADD, _PREC_MUL, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4


def _render(e: Expr):
    if isinstance(e, Const):
        v = e.value
        if isinstance(v, complex):
            return f"({repr(v.real)}+{repr(v.imag)}i)".replace("+-", "-"), _PREC_ATOM
        return repr(v), (_PREC_ATOM if v >= 0 else _PREC_MUL)
    if isinstance(e, Var):
        return "t", _PREC_ATOM
    if isinstance(e, Neg):
        return f"-{_wrap(e.arg, _PREC_POW)}", _PREC_MUL
    if isinstance(e, Add):
        return f"{_wrap(e.lhs, _PREC_ADD)} + {_wrap(e.rhs, _PREC_ADD + 1)}", _PREC_ADD
    if isinstance(e, Sub):
        return f"{_wrap(e.lhs, _PREC_ADD)} - {_wrap(e.rhs, _PREC_ADD + 1)}", _PREC_ADD
    if isinstance(e, Mul):
        return f"{_wrap(e.lhs, _PREC_MUL)}*{_wrap(e.rhs, _PREC_MUL + 1)}", _PREC_MUL
    if isinstance(e, Div):
        return f"{_wrap(e.lhs, _PREC_MUL)}/{_wrap(e.rhs, _PREC_MUL + 1)}", _PREC_MUL
    if isinstance(e, Pow):
        q = e.exponent
        if q.denominator == 1:
            es = str(int(q)) if q >= 0 else f"({int(q)})"
        else:
            es = f"({q.numerator}/{q.denominator})"
        return f"{_wrap(e.base, _PREC_ATOM)}^{es}", _PREC_POW
    if isinstance(e, Call):
        return f"{e.fn}({to_text(e.arg)})", _PREC_ATOM
    raise TypeError(f"cannot print {type(e).__name__}")


def _wrap(e: Expr, min_prec: int) -> str:
    s, prec = _render(e)
    return f"({s})" if prec < min_prec else s


def to_text(e: Expr) -> str:
    """Printable form that re-parses to an expression printing identically."""
    return _render(e)[0]


# ---------------------------------------------------------------------------
# Intervals, paths, jets


@dataclass(frozen=True)
class Interval:
    """Open interval (a, b); either endpoint may be infinite."""

    a: float
    b: float

    def __post_init__(self):
        if not self.a < self.b:
            raise SignatureError(f"empty interval ({self.a}, {self.b})")

    def contains(self, t: float) -> bool:
        return self.a < t < self.b

    def __str__(self):
        return f"({_num_str(self.a)}, {_num_str(self.b)})"


def _num_str(v: float) -> str:
    if v == math.inf:
        return "inf"
    if v == -math.inf:
        return "-inf"
    return repr(v)


def interval_anchor(interval: Interval) -> float:
    """A canonical interior point: midpoint when finite, 0 on the full
    line, one unit inside a semi-infinite interval."""
    a, b = interval.a, interval.b
    if math.isinf(a) and math.isinf(b):
        return 0.0
    if math.isinf(a):
        return b - 1.0
    if math.isinf(b):
        return a + 1.0
    return 0.5 * (a + b)


@dataclass(eq=False)
class PathDef:
    """A path: n coordinate expressions in t on an open interval."""

    sig: Signature
    field: FieldTag
    components: tuple
    interval: Interval
    label: str = ""

    def __post_init__(self):
        self.components = tuple(self.components)
        if len(self.components) != self.sig.n:
            raise SignatureError(
                f"{len(self.components)} components for ambient dimension n={self.sig.n}")
        self._derivs = [[c] for c in self.components]
        self._dpath = None
        self._cache = {}
        self._lock = threading.Lock()

    @property
    def n(self) -> int:
        return self.sig.n

    def component_derivative(self, j: int, order: int) -> Expr:
        chain = self._derivs[j]
        if len(chain) <= order:
            with self._lock:
                while len(chain) <= order:
                    chain.append(differentiate(chain[-1]))
        return chain[order]

    def __repr__(self):
        comps = ", ".join(to_text(c) for c in self.components)
        return f"<PathDef {self.label or 'path'} n={self.n} p={self.sig.p} [{comps}] on {self.interval}>"


@dataclass(eq=False)
class Jet:
    """Values x(t), x'(t), ..., x^(r)(t) stacked as rows (r+1) x n."""

    t: float
    order: int
    rows: np.ndarray

    @property
    def n(self) -> int:
        return self.rows.shape[1]


def eval_jet(path: PathDef, t: float, order: int) -> Jet:
    """Evaluate the path and its derivatives up to ``order`` at t.

    Derivative expressions are computed symbolically once per
    (component, order) and compiled; repeated calls are cheap.
    """
    if order < 0:
        raise SignatureError(f"jet order must be >= 0, got {order}")
    if not path.interval.contains(t):
        raise EvalDomainError(f"t={t} outside the path interval {path.interval}")
    n = path.n
    dtype = float if path.field is FieldTag.REAL else complex
    rows = np.zeros((order + 1, n), dtype=dtype)
    for j in range(n):
        for k in range(order + 1):
            expr = path.component_derivative(j, k)
            try:
                rows[k, j] = eval_expr(expr, t, path.field)
            except EvalDomainError as exc:
                raise EvalDomainError(f"component x{j + 1}, derivative order {k}: {exc}") from None
    return Jet(t=float(t), order=order, rows=rows)


def derivative_path(path: PathDef) -> PathDef:
    """The path t -> x'(t) (each component differentiated once)."""
    if path._dpath is None:
        with path._lock:
            if path._dpath is None:
                path._dpath = PathDef(
                    sig=path.sig,
                    field=path.field,
                    components=tuple(differentiate(c) for c in path.components),
                    interval=path.interval,
                    label=(path.label + "'") if path.label else "derivative",
                )
    return path._dpath


# ---------------------------------------------------------------------------
# Grids


_COMPACT_SCALE = 4.0


def _compact_range(interval: Interval):
    """Map the interval monotonically onto a bounded range (identity when
    already bounded, tanh-scaled otherwise); returns (lo, hi, invert)."""
    a, b = interval.a, interval.b
    if math.isinf(a) and math.isinf(b):
        return -1.0, 1.0, lambda u: _COMPACT_SCALE * math.atanh(u)
    if math.isinf(b):
        return 0.0, 1.0, lambda u: a + _COMPACT_SCALE * math.atanh(u)
    if math.isinf(a):
        return -1.0, 0.0, lambda u: b + _COMPACT_SCALE * math.atanh(u)
    return a, b, lambda u: u


def sample_grid(interval: Interval, count: int, margin: float = 0.05) -> list:
    """Strictly increasing interior points; infinite ends are compactified
    before uniform placement, ``margin`` keeps clear of the endpoints."""
    if count < 2:
        raise SignatureError(f"grid needs at least 2 points, got {count}")
    if not 0 < margin < 0.5:
        raise SignatureError(f"margin must lie in (0, 0.5), got {margin}")
    lo, hi, invert = _compact_range(interval)
    span = hi - lo
    lo_m, hi_m = lo + margin * span, hi - margin * span
    return [invert(lo_m + (hi_m - lo_m) * k / (count - 1)) for k in range(count)]


def chebyshev_grid(interval: Interval, count: int, margin: float = 0.08) -> list:
    """Chebyshev-distributed interior points (denser near the ends of the
    compactified range), for equivalence grids."""
    if count < 1:
        raise SignatureError(f"grid needs at least 1 point, got {count}")
    lo, hi, invert = _compact_range(interval)
    span = hi - lo
    lo_m, hi_m = lo + margin * span, hi - margin * span
    mid, half = 0.5 * (lo_m + hi_m), 0.5 * (hi_m - lo_m)
    us = sorted(mid + half * math.cos(math.pi * (2 * k + 1) / (2 * count)) for k in range(count))
    return [invert(u) for u in us]


# ---------------------------------------------------------------------------
# Parsing


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[()+\-*/^]))"
)


class _Tok:
    __slots__ = ("kind", "text", "col")

    def __init__(self, kind, text, col):
        self.kind = kind
        self.text = text
        self.col = col


def _tokenize(text: str, line: int, col_base: int):
    pos, out = 0, []
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            bad_at = pos + (len(text[pos:]) - len(stripped))
            raise PathParseError(f"unexpected character {stripped[0]!r}", line, col_base + bad_at)
        col = col_base + m.start(m.lastgroup)
        kind = m.lastgroup
        tok = m.group(kind)
        if kind == "num" and m.end() < len(text) and text[m.end()] == "i":
            out.append(_Tok("imag", tok, col))
            pos = m.end() + 1
            continue
        if kind == "op" and tok == "**":
            tok = "^"
        out.append(_Tok(kind, tok, col))
        pos = m.end()
    out.append(_Tok("end", "", col_base + len(text)))
    return out


class _ExprParser:
    """Recursive-descent parser over one expression string."""

    def __init__(self, text, field, line=None, col_base=1):
        self.field = field
        self.line = line
        self.toks = _tokenize(text, line, col_base)
        self.pos = 0

    def peek(self):
        return self.toks[self.pos]

    def take(self):
        tok = self.toks[self.pos]
        self.pos += 1
        return tok

    def fail(self, message, tok=None):
        tok = tok or self.peek()
        raise PathParseError(message, self.line, tok.col)

    def parse(self) -> Expr:
        e = self.expr()
        if self.peek().kind != "end":
            self.fail(f"unexpected token {self.peek().text!r}")
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek().text in ("+", "-"):
            op = self.take().text
            rhs = self.term()
            e = add(e, rhs) if op == "+" else sub(e, rhs)
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.peek().text in ("*", "/"):
            op = self.take().text
            rhs = self.unary()
            e = mul(e, rhs) if op == "*" else div(e, rhs)
        return e

    def unary(self) -> Expr:
        if self.peek().text == "-":
            self.take()
            return neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek().text == "^":
            caret = self.take()
            exp = self.unary()
            if not isinstance(exp, Const) or isinstance(exp.value, complex):
                self.fail("exponent must be a real constant (integer or rational)", caret)
            try:
                q = Fraction(exp.value).limit_denominator(10**9)
            except (OverflowError, ValueError):
                self.fail(f"exponent {exp.value!r} is not rational", caret)
            if abs(float(q) - exp.value) > 1e-15 * max(1.0, abs(exp.value)):
                self.fail(f"exponent {exp.value!r} is not an integer or small rational", caret)
            return powc(base, q)
        return base

    def atom(self) -> Expr:
        tok = self.take()
        if tok.kind == "num":
            return Const(float(tok.text))
        if tok.kind == "imag":
            if self.field is not FieldTag.COMPLEX:
                self.fail("imaginary literal in a real-field definition", tok)
            return Const(complex(0.0, float(tok.text)))
        if tok.kind == "name":
            if tok.text == "t":
                return T
            if tok.text == "i":
                if self.field is not FieldTag.COMPLEX:
                    self.fail("the imaginary unit 'i' is reserved for complex-field definitions", tok)
                return Const(1j)
            if self.peek().text == "(":
                if tok.text not in UNARY_FUNCTIONS:
                    self.fail(f"unknown function {tok.text!r}", tok)
                self.take()
                inner = self.expr()
                closing = self.take()
                if closing.text != ")":
                    self.fail("expected ')'", closing)
                return call(tok.text, inner)
            self.fail(f"unknown name {tok.text!r}", tok)
        if tok.text == "(":
            inner = self.expr()
            closing = self.take()
            if closing.text != ")":
                self.fail("expected ')'", closing)
            return inner
        self.fail(f"unexpected token {tok.text!r}" if tok.text else "unexpected end of expression", tok)


def parse_expression(text: str, field: FieldTag = FieldTag.REAL, line: int | None = None,
                     col_base: int = 1) -> Expr:
    """Parse a single coordinate expression."""
    return _ExprParser(text, field, line, col_base).parse()


_HEADER_KEYS = ("field", "n", "p", "interval", "label")
_COMPONENT_RE = re.compile(r"^x(\d+)$")
_INTERVAL_RE = re.compile(r"^\(\s*([^,()]+?)\s*,\s*([^,()]+?)\s*\)$")


def _parse_endpoint(text: str, line: int) -> float:
    s = text.strip().lower()
    try:
        if s in ("inf", "+inf"):
            return math.inf
        if s == "-inf":
            return -math.inf
        return float(s)
    except ValueError:
        raise PathParseError(f"bad interval endpoint {text.strip()!r}", line) from None


def _split_directives(raw_line: str, line_no: int):
    """One directive per line normally; a line whose every
    whitespace-separated token contains '=' is a compact multi-directive
    line (e.g. ``n=2 p=1 x1=cosh(t) x2=sinh(t)``)."""
    body = raw_line.split("#", 1)[0]
    if not body.strip():
        return []
    tokens = body.split()
    if len(tokens) >= 2 and all("=" in tok for tok in tokens):
        out = []
        for tok in tokens:
            key, _, value = tok.partition("=")
            col = body.index(tok) + 1
            out.append((key.strip(), value.strip(), line_no, col + tok.index("=") + 1))
        return out
    for sep in (":", "="):
        key, found, value = body.partition(sep)
        if found and key.strip() and " " not in key.strip() and "\t" not in key.strip():
            col = len(key) + 2
            return [(key.strip(), value.strip(), line_no, col)]
    raise PathParseError("expected 'key: value' or 'key = value'", line_no)


def parse_path(text: str) -> PathDef:
    """Parse a path definition document into a validated PathDef.

    Header lines declare field/n/p/interval (and an optional label),
    body lines give the coordinates ``x1 = <expression>`` ...  ``#``
    starts a comment.  Nothing partial is ever returned: any defect
    raises PathParseError with the offending line.
    """
    headers = {}
    comps = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        for key, value, ln, col in _split_directives(raw, line_no):
            m = _COMPONENT_RE.match(key)
            if m:
                idx = int(m.group(1))
                if idx in comps:
                    raise PathParseError(f"duplicate component x{idx}", ln)
                comps[idx] = (value, ln, col)
            elif key in _HEADER_KEYS:
                if key in headers:
                    raise PathParseError(f"duplicate header {key!r}", ln)
                headers[key] = (value, ln)
            else:
                raise PathParseError(f"unknown directive {key!r}", ln)

    field_text, field_line = headers.get("field", ("real", 0))
    try:
        field = FieldTag(field_text.lower())
    except ValueError:
        raise PathParseError(f"field must be 'real' or 'complex', got {field_text!r}", field_line) from None

    if "n" not in headers:
        raise PathParseError("missing 'n' header")
    n_text, n_line = headers["n"]
    try:
        n = int(n_text)
    except ValueError:
        raise PathParseError(f"n must be an integer, got {n_text!r}", n_line) from None
    p_text, p_line = headers.get("p", (str(n), 0))
    try:
        p = int(p_text)
    except ValueError:
        raise PathParseError(f"p must be an integer, got {p_text!r}", p_line) from None
    try:
        sig = Signature(n, p)
    except SignatureError as exc:
        raise PathParseError(str(exc), p_line or n_line) from None

    if "interval" not in headers:
        raise PathParseError("missing 'interval' header")
    iv_text, iv_line = headers["interval"]
    m = _INTERVAL_RE.match(iv_text)
    if not m:
        raise PathParseError(f"malformed interval {iv_text!r}", iv_line)
    a = _parse_endpoint(m.group(1), iv_line)
    b = _parse_endpoint(m.group(2), iv_line)
    try:
        interval = Interval(a, b)
    except SignatureError as exc:
        raise PathParseError(str(exc), iv_line) from None

    if set(comps) != set(range(1, n + 1)):
        missing = sorted(set(range(1, n + 1)) - set(comps))
        extra = sorted(set(comps) - set(range(1, n + 1)))
        parts = []
        if missing:
            parts.append("missing " + ", ".join(f"x{k}" for k in missing))
        if extra:
            parts.append("unexpected " + ", ".join(f"x{k}" for k in extra))
        raise PathParseError(f"component/dimension mismatch for n={n}: " + "; ".join(parts))

    components = []
    for k in range(1, n + 1):
        value, ln, col = comps[k]
        if not value:
            raise PathParseError(f"empty expression for x{k}", ln)
        components.append(parse_expression(value, field, ln, col))
    label, _ = headers.get("label", ("", 0))
    return PathDef(sig=sig, field=field, components=tuple(components),
                   interval=interval, label=label)
