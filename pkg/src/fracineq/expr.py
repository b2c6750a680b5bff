"""Univariate real expressions: parsing, evaluation, symbolic differentiation,
printing, and grid-based property checks.

Grammar (whitespace-insensitive)::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := atom ('^' factor)?
    atom   := NUMBER | 'x' | FUNC '(' expr ')' | '(' expr ')' | '-' atom
    FUNC   := exp | log | sqrt | sin | cos | abs

NUMBER is a decimal literal with optional exponent.  Unary minus binds at the
atom level, so ``-x^2`` parses as ``(-x)^2``; the printer emits parentheses
accordingly, which makes ``parse(to_text(e))`` structurally equal to ``e``.

Evaluation is IEEE double precision and *total* on the declared domain:
leaving the domain (log/sqrt of a negative, division by zero, fractional
power of a negative base) or producing a non-finite value raises
``EvalDomainError`` instead of returning NaN/inf.  All values are immutable
and every operation here is pure, so concurrent use is safe.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

from .errors import (
    EvalDomainError,
    NonDifferentiableError,
    ParseError,
    UnknownIdentifierError,
)
from .report import CheckReport

__all__ = [
    "Expr",
    "Const",
    "Var",
    "Unary",
    "Binary",
    "FunctionRole",
    "parse",
    "evaluate",
    "differentiate",
    "to_text",
    "check_property",
    "PROPERTY_GRID",
]

_FUNCS = ("abs", "cos", "exp", "log", "sin", "sqrt")


class Expr:
    """Base class of expression nodes.  Nodes are frozen and hashable;
    equality is structural."""

    __slots__ = ()

    def __call__(self, x):
        return evaluate(self, x)

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True)
class Const(Expr):
    value: float


@dataclass(frozen=True)
class Var(Expr):
    pass


@dataclass(frozen=True)
class Unary(Expr):
    op: str  # 'neg' or a FUNC name
    arg: Expr


@dataclass(frozen=True)
class Binary(Expr):
    op: str  # '+', '-', '*', '/', '^'
    left: Expr
    right: Expr


@dataclass(frozen=True)
class FunctionRole:
    """What a function is used *as*: the integrand f, the weight g, or the
    monotone map h, together with the properties that role requires."""

    role: str  # 'integrand-f' | 'weight-g' | 'map-h'
    required: tuple[str, ...] = ()

    def check(self, e: Expr, iv) -> dict[str, bool]:
        return {prop: check_property(e, iv, prop).passed for prop in self.required}


# ---------------------------------------------------------------------------
# Tokenizer / parser
# ---------------------------------------------------------------------------

_NUMBER = r"(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?"
_TOKEN_RE = re.compile(rf"({_NUMBER})|([A-Za-z_][A-Za-z_0-9]*)|([-+*/^()])")

_ATOM_EXPECT = ("number", "x", "function name", "'('", "'-'")


@dataclass(frozen=True)
class _Token:
    kind: str  # 'num' | 'name' | 'op' | 'end'
    text: str
    offset: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        if m.group(1) is not None:
            tokens.append(_Token("num", m.group(1), pos))
        elif m.group(2) is not None:
            tokens.append(_Token("name", m.group(2), pos))
        else:
            tokens.append(_Token("op", m.group(3), pos))
        pos = m.end()
    tokens.append(_Token("end", "", n))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str) -> None:
        tok = self.peek()
        if tok.kind == "op" and tok.text == op:
            self.advance()
            return
        raise ParseError(
            f"unexpected {_describe(tok)}", tok.offset, expected=(f"'{op}'",)
        )

    def parse(self) -> Expr:
        e = self.expr()
        tok = self.peek()
        if tok.kind != "end":
            raise ParseError(
                f"unexpected {_describe(tok)}",
                tok.offset,
                expected=("end of input", "'+'", "'-'", "'*'", "'/'", "'^'"),
            )
        return e

    def expr(self) -> Expr:
        e = self.term()
        while True:
            tok = self.peek()
            if tok.kind == "op" and tok.text in "+-":
                self.advance()
                e = Binary(tok.text, e, self.term())
            else:
                return e

    def term(self) -> Expr:
        e = self.factor()
        while True:
            tok = self.peek()
            if tok.kind == "op" and tok.text in "*/":
                self.advance()
                e = Binary(tok.text, e, self.factor())
            else:
                return e

    def factor(self) -> Expr:
        base = self.atom()
        tok = self.peek()
        if tok.kind == "op" and tok.text == "^":
            self.advance()
            return Binary("^", base, self.factor())
        return base

    def atom(self) -> Expr:
        tok = self.peek()
        if tok.kind == "num":
            self.advance()
            return Const(float(tok.text))
        if tok.kind == "name":
            self.advance()
            if tok.text == "x":
                return Var()
            if tok.text in _FUNCS:
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")")
                return Unary(tok.text, arg)
            raise UnknownIdentifierError(tok.text, tok.offset)
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            e = self.expr()
            self.expect_op(")")
            return e
        if tok.kind == "op" and tok.text == "-":
            self.advance()
            inner = self.atom()
            if isinstance(inner, Const):
                return Const(-inner.value)
            return Unary("neg", inner)
        raise ParseError(f"unexpected {_describe(tok)}", tok.offset, expected=_ATOM_EXPECT)


def _describe(tok: _Token) -> str:
    if tok.kind == "end":
        return "end of input"
    return f"token {tok.text!r}"


def parse(text: str) -> Expr:
    """Parse expression text into its unique AST under the grammar above."""
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def evaluate(e: Expr, x) -> Union[float, np.ndarray]:
    """Evaluate ``e`` at ``x`` (scalar or ndarray, returned with same shape).

    Raises ``EvalDomainError`` on any domain violation or non-finite result.
    """
    xv = np.asarray(x, dtype=float)
    with np.errstate(all="ignore"):
        out = np.asarray(_ev(e, xv), dtype=float)
    if not np.all(np.isfinite(out)):
        raise EvalDomainError("expression evaluated to a non-finite value")
    if isinstance(x, np.ndarray):
        if out.shape != xv.shape:
            out = np.broadcast_to(out, xv.shape)
        return out
    return float(out)


def _ev(e: Expr, x: np.ndarray):
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        return x
    if isinstance(e, Unary):
        v = _ev(e.arg, x)
        op = e.op
        if op == "neg":
            return np.negative(v)
        if op == "abs":
            return np.abs(v)
        if op == "exp":
            return np.exp(v)
        if op == "log":
            if np.any(np.asarray(v) <= 0.0):
                raise EvalDomainError("log of a non-positive value")
            return np.log(v)
        if op == "sqrt":
            if np.any(np.asarray(v) < 0.0):
                raise EvalDomainError("sqrt of a negative value")
            return np.sqrt(v)
        if op == "sin":
            return np.sin(v)
        if op == "cos":
            return np.cos(v)
        raise AssertionError(f"unknown unary op {op!r}")
    if isinstance(e, Binary):
        a = _ev(e.left, x)
        b = _ev(e.right, x)
        op = e.op
        if op == "+":
            return np.add(a, b)
        if op == "-":
            return np.subtract(a, b)
        if op == "*":
            return np.multiply(a, b)
        if op == "/":
            if np.any(np.asarray(b) == 0.0):
                raise EvalDomainError("division by zero")
            return np.divide(a, b)
        if op == "^":
            return _pow_values(a, b)
        raise AssertionError(f"unknown binary op {op!r}")
    raise AssertionError(f"unknown node {type(e).__name__}")


def _pow_values(a, b):
    av = np.asarray(a, dtype=float)
    bv = np.asarray(b, dtype=float)
    integral = bv == np.round(bv)
    if np.any((av < 0.0) & ~integral):
        raise EvalDomainError("fractional power of a negative base")
    if np.any((av == 0.0) & (bv <= 0.0)):
        raise EvalDomainError("zero base with non-positive exponent")
    return np.power(av, bv)


# ---------------------------------------------------------------------------
# Simplifying constructors (constant folding + algebraic identities)
# ---------------------------------------------------------------------------

_ZERO = Const(0.0)
_ONE = Const(1.0)


def _is_c(e: Expr, v: float | None = None) -> bool:
    return isinstance(e, Const) and (v is None or e.value == v)


def _add(l: Expr, r: Expr) -> Expr:
    if isinstance(l, Const) and isinstance(r, Const):
        return Const(l.value + r.value)
    if _is_c(l, 0.0):
        return r
    if _is_c(r, 0.0):
        return l
    return Binary("+", l, r)


def _sub(l: Expr, r: Expr) -> Expr:
    if isinstance(l, Const) and isinstance(r, Const):
        return Const(l.value - r.value)
    if _is_c(r, 0.0):
        return l
    if _is_c(l, 0.0):
        return _neg(r)
    return Binary("-", l, r)


def _mul(l: Expr, r: Expr) -> Expr:
    if isinstance(l, Const) and isinstance(r, Const):
        return Const(l.value * r.value)
    if _is_c(l, 0.0) or _is_c(r, 0.0):
        return _ZERO
    if _is_c(l, 1.0):
        return r
    if _is_c(r, 1.0):
        return l
    return Binary("*", l, r)


def _div(l: Expr, r: Expr) -> Expr:
    if _is_c(r, 1.0):
        return l
    if isinstance(l, Const) and isinstance(r, Const) and r.value != 0.0:
        return Const(l.value / r.value)
    if _is_c(l, 0.0):
        return _ZERO
    return Binary("/", l, r)


def _pow(l: Expr, r: Expr) -> Expr:
    if _is_c(r, 1.0):
        return l
    if _is_c(r, 0.0):
        return _ONE
    if isinstance(l, Const) and isinstance(r, Const):
        rv = r.value
        if l.value > 0.0 or rv == np.round(rv):
            return Const(float(l.value**rv))
    return Binary("^", l, r)


def _neg(e: Expr) -> Expr:
    if isinstance(e, Const):
        return Const(-e.value)
    if isinstance(e, Unary) and e.op == "neg":
        return e.arg
    return Unary("neg", e)


# ---------------------------------------------------------------------------
# Symbolic differentiation
# ---------------------------------------------------------------------------


def differentiate(e: Expr) -> Expr:
    """Symbolic derivative of ``e`` with respect to x.

    ``abs`` nodes are rejected (non-differentiable at 0): absolute values are
    applied to *evaluated* derivatives downstream, never differentiated
    through.
    """
    _reject_abs(e)
    return _d(e)


def _reject_abs(e: Expr) -> None:
    if isinstance(e, Unary):
        if e.op == "abs":
            raise NonDifferentiableError("cannot differentiate through abs")
        _reject_abs(e.arg)
    elif isinstance(e, Binary):
        _reject_abs(e.left)
        _reject_abs(e.right)


def _d(e: Expr) -> Expr:
    if isinstance(e, Const):
        return _ZERO
    if isinstance(e, Var):
        return _ONE
    if isinstance(e, Unary):
        du = _d(e.arg)
        op = e.op
        if op == "neg":
            return _neg(du)
        if op == "exp":
            return _mul(e, du)
        if op == "log":
            return _div(du, e.arg)
        if op == "sqrt":
            return _div(du, _mul(Const(2.0), e))
        if op == "sin":
            return _mul(Unary("cos", e.arg), du)
        if op == "cos":
            return _neg(_mul(Unary("sin", e.arg), du))
        raise AssertionError(f"unknown unary op {op!r}")
    if isinstance(e, Binary):
        op = e.op
        dl = _d(e.left)
        dr = _d(e.right)
        if op == "+":
            return _add(dl, dr)
        if op == "-":
            return _sub(dl, dr)
        if op == "*":
            return _add(_mul(dl, e.right), _mul(e.left, dr))
        if op == "/":
            num = _sub(_mul(dl, e.right), _mul(e.left, dr))
            return _div(num, _pow(e.right, Const(2.0)))
        if op == "^":
            if isinstance(e.right, Const):
                c = e.right.value
                return _mul(_mul(Const(c), _pow(e.left, Const(c - 1.0))), dl)
            # general u^v: u^v * (v' log u + v u' / u); requires u > 0
            term = _add(
                _mul(dr, Unary("log", e.left)),
                _div(_mul(e.right, dl), e.left),
            )
            return _mul(e, term)
        raise AssertionError(f"unknown binary op {op!r}")
    raise AssertionError(f"unknown node {type(e).__name__}")


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------

_LEVEL_ADD, _LEVEL_MUL, _LEVEL_POW, _LEVEL_ATOM = 1, 2, 3, 4


def _level(e: Expr) -> int:
    if isinstance(e, Binary):
        if e.op in "+-":
            return _LEVEL_ADD
        if e.op in "*/":
            return _LEVEL_MUL
        return _LEVEL_POW
    return _LEVEL_ATOM


def _fmt_const(v: float) -> str:
    if v == np.round(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def _render(e: Expr, minimum: int) -> str:
    if _level(e) < minimum:
        return "(" + _render(e, _LEVEL_ADD) + ")"
    if isinstance(e, Const):
        return _fmt_const(e.value)
    if isinstance(e, Var):
        return "x"
    if isinstance(e, Unary):
        if e.op == "neg":
            return "-" + _render(e.arg, _LEVEL_ATOM)
        return f"{e.op}({_render(e.arg, _LEVEL_ADD)})"
    assert isinstance(e, Binary)
    if e.op in "+-":
        return f"{_render(e.left, _LEVEL_ADD)} {e.op} {_render(e.right, _LEVEL_MUL)}"
    if e.op in "*/":
        return _render(e.left, _LEVEL_MUL) + e.op + _render(e.right, _LEVEL_POW)
    return _render(e.left, _LEVEL_ATOM) + "^" + _render(e.right, _LEVEL_POW)


def to_text(e: Expr) -> str:
    """Render ``e`` so that ``parse(to_text(e))`` is structurally equal."""
    return _render(e, _LEVEL_ADD)


# ---------------------------------------------------------------------------
# Grid-based property checks
# ---------------------------------------------------------------------------

#: Number of uniform sample points used by ``check_property``.
PROPERTY_GRID = 2049

_REFINE_GRID = 513

PROPERTIES = ("convex", "nonnegative", "strictly-increasing", "symmetric-about-midpoint")


def _bounds(iv) -> tuple[float, float]:
    if hasattr(iv, "a") and hasattr(iv, "b"):
        return float(iv.a), float(iv.b)
    lo, hi = iv
    return float(lo), float(hi)


def check_property(e: Expr, iv, prop: str) -> CheckReport:
    """Heuristic grid certificate for a function property on an interval.

    Samples ``e`` on a uniform 2049-point grid, refines locally around the
    worst point, and reports the worst margin and a witness.  This certifies
    corpus inputs against the checks' hypotheses; it is not a proof.
    """
    if prop not in PROPERTIES:
        raise ValueError(f"unknown property {prop!r}; expected one of {PROPERTIES}")
    lo, hi = _bounds(iv)
    if not lo < hi:
        raise ValueError(f"invalid interval [{lo}, {hi}]")
    xs = np.linspace(lo, hi, PROPERTY_GRID)
    vals = np.broadcast_to(np.asarray(evaluate(e, xs)), xs.shape)
    tol = 1e-10 * (1.0 + float(np.max(np.abs(vals))))

    if prop == "convex":
        margin, witness = _convexity_margin(xs, vals)
        m2, w2 = _refine_convexity(e, xs, vals)
        if m2 < margin:
            margin, witness = m2, w2
        passed = margin >= -tol
    elif prop == "nonnegative":
        i = int(np.argmin(vals))
        margin, witness = _refine_min(e, xs, i)
        passed = margin >= -tol
    elif prop == "strictly-increasing":
        d = differentiate(e)
        dvals = np.broadcast_to(np.asarray(evaluate(d, xs)), xs.shape)
        i = int(np.argmin(dvals))
        margin, witness = _refine_min(d, xs, i)
        passed = bool(np.all(dvals > 0.0)) and margin > 0.0
    else:  # symmetric-about-midpoint
        mirror = np.abs(vals - vals[::-1])
        i = int(np.argmax(mirror))
        worst = _refine_symmetry(e, xs, i, lo, hi)
        margin = tol - worst
        witness = float(xs[i])
        passed = worst <= tol

    return CheckReport(
        check=f"property-{prop}",
        passed=bool(passed),
        tol=tol,
        margin=float(margin),
        witness=witness,
        details={"grid": PROPERTY_GRID},
    )


def _convexity_margin(xs: np.ndarray, vals: np.ndarray) -> tuple[float, float]:
    """Worst midpoint-inequality margin over all grid pairs at dyadic
    distances: min over pairs of (f(x)+f(y))/2 - f((x+y)/2)."""
    worst = np.inf
    witness = float(xs[0])
    n = xs.size
    step = 2
    while step < n:
        half = step // 2
        m = 0.5 * (vals[:-step] + vals[step:]) - vals[half : n - half]
        i = int(np.argmin(m))
        if m[i] < worst:
            worst = float(m[i])
            witness = float(xs[i + half])
        step *= 2
    return worst, witness


def _refine_convexity(e: Expr, xs: np.ndarray, vals: np.ndarray) -> tuple[float, float]:
    worst, witness = _convexity_margin(xs, vals)
    lo = max(witness - 4.0 * (xs[1] - xs[0]) * 64, xs[0])
    hi = min(witness + 4.0 * (xs[1] - xs[0]) * 64, xs[-1])
    if hi <= lo:
        return worst, witness
    fine = np.linspace(lo, hi, _REFINE_GRID)
    fvals = np.broadcast_to(np.asarray(evaluate(e, fine)), fine.shape)
    return _convexity_margin(fine, fvals)


def _refine_min(e: Expr, xs: np.ndarray, i: int) -> tuple[float, float]:
    lo = xs[max(i - 1, 0)]
    hi = xs[min(i + 1, xs.size - 1)]
    if hi <= lo:
        return float(evaluate(e, float(xs[i]))), float(xs[i])
    fine = np.linspace(lo, hi, _REFINE_GRID)
    fvals = np.broadcast_to(np.asarray(evaluate(e, fine)), fine.shape)
    j = int(np.argmin(fvals))
    return float(fvals[j]), float(fine[j])


def _refine_symmetry(e: Expr, xs: np.ndarray, i: int, lo: float, hi: float) -> float:
    wlo = max(float(xs[max(i - 1, 0)]), lo)
    whi = min(float(xs[min(i + 1, xs.size - 1)]), hi)
    if whi <= wlo:
        pts = np.asarray([xs[i]])
    else:
        pts = np.linspace(wlo, whi, _REFINE_GRID)
    direct = np.broadcast_to(np.asarray(evaluate(e, pts)), pts.shape)
    mirrored = np.broadcast_to(np.asarray(evaluate(e, lo + hi - pts)), pts.shape)
    return float(np.max(np.abs(direct - mirrored)))


def random_points(iv, count: int, seed: int = 0) -> np.ndarray:
    """Uniform random interior points, reproducible; used by consistency tests."""
    lo, hi = _bounds(iv)
    rng = np.random.default_rng(seed)
    return lo + (hi - lo) * (0.01 + 0.98 * rng.random(count))
