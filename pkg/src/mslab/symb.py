"""A small holomorphic expression language in one complex variable ``z``.

Grammar (whitespace insignificant)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('+' | '-') unary | power
    power  := atom ('^' unary)?          # exponent must fold to an integer
    atom   := NUMBER | 'z' | 'i' | ('exp' | 'log') '(' expr ')' | '(' expr ')'

``NUMBER`` accepts an optional trailing ``i`` (``2i``, ``1.5e-3i``).  ``log``
is the principal branch, cut along the negative real axis.

Nodes are frozen dataclasses, so expressions are hashable and safe to share.
Construction goes through folding helpers (``add``, ``mul``...), which keep
derivatives of constants literally ``Const(0)``.
"""

from __future__ import annotations

import cmath
import math
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import ExprSyntaxError, PoleHit

__all__ = [
    "Expr", "Const", "Var", "Add", "Sub", "Mul", "Div", "Pow", "Neg", "Exp", "Log",
    "Z", "parse_expr", "differentiate", "eval_expr", "to_text", "poles",
    "denominators", "is_zero",
]


class Expr:
    """Base class; subclasses implement ``_eval`` over numpy arrays."""

    def __call__(self, z):
        """Vectorized evaluation; no pole checks, non-finite values propagate."""
        z = np.asarray(z, dtype=complex)
        with np.errstate(all="ignore"):
            out = self._eval(z)
        return np.broadcast_to(np.asarray(out, dtype=complex), z.shape).copy() if z.ndim else complex(out)

    def __str__(self):
        return to_text(self)

    def __add__(self, other):
        return add(self, _lift(other))

    def __radd__(self, other):
        return add(_lift(other), self)

    def __sub__(self, other):
        return sub(self, _lift(other))

    def __rsub__(self, other):
        return sub(_lift(other), self)

    def __mul__(self, other):
        return mul(self, _lift(other))

    def __rmul__(self, other):
        return mul(_lift(other), self)

    def __truediv__(self, other):
        return div(self, _lift(other))

    def __rtruediv__(self, other):
        return div(_lift(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, n):
        return power(self, n)


@dataclass(frozen=True, repr=False)
class Const(Expr):
    value: complex

    def __post_init__(self):
        object.__setattr__(self, "value", complex(self.value))

    def _eval(self, z):
        return self.value

    def __repr__(self):
        return f"Const({self.value!r})"


@dataclass(frozen=True, repr=False)
class Var(Expr):
    def _eval(self, z):
        return z

    def __repr__(self):
        return "Var()"


@dataclass(frozen=True, repr=False)
class Add(Expr):
    left: Expr
    right: Expr

    def _eval(self, z):
        return self.left._eval(z) + self.right._eval(z)


@dataclass(frozen=True, repr=False)
class Sub(Expr):
    left: Expr
    right: Expr

    def _eval(self, z):
        return self.left._eval(z) - self.right._eval(z)


@dataclass(frozen=True, repr=False)
class Mul(Expr):
    left: Expr
    right: Expr

    def _eval(self, z):
        return self.left._eval(z) * self.right._eval(z)


@dataclass(frozen=True, repr=False)
class Div(Expr):
    num: Expr
    den: Expr
    # roots of the denominator when it is a polynomial of degree <= 4
    pole_list: tuple | None = field(default=None, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "pole_list", _static_roots(self.den))

    def _eval(self, z):
        return self.num._eval(z) / self.den._eval(z)


@dataclass(frozen=True, repr=False)
class Pow(Expr):
    base: Expr
    exponent: int
    pole_list: tuple | None = field(default=None, compare=False, hash=False)

    def __post_init__(self):
        if self.exponent < 0:
            object.__setattr__(self, "pole_list", _static_roots(self.base))

    def _eval(self, z):
        b = self.base._eval(z)
        if self.exponent >= 0:
            return b**self.exponent
        return 1.0 / b ** (-self.exponent)


@dataclass(frozen=True, repr=False)
class Neg(Expr):
    arg: Expr

    def _eval(self, z):
        return -self.arg._eval(z)


@dataclass(frozen=True, repr=False)
class Exp(Expr):
    arg: Expr

    def _eval(self, z):
        return np.exp(self.arg._eval(z))


@dataclass(frozen=True, repr=False)
class Log(Expr):
    arg: Expr
    pole_list: tuple | None = field(default=None, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "pole_list", _static_roots(self.arg))

    def _eval(self, z):
        return np.log(self.arg._eval(z))


for _cls in (Add, Sub, Mul, Div, Pow, Neg, Exp, Log):
    _cls.__repr__ = lambda self: f"parse_expr({to_text(self)!r})"

Z = Var()
ZERO = Const(0)
ONE = Const(1)


def _lift(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, float, complex, np.number)):
        return Const(complex(x))
    raise TypeError(f"cannot use {type(x).__name__} in an expression")


def is_zero(e: Expr) -> bool:
    return isinstance(e, Const) and e.value == 0


def _is_one(e: Expr) -> bool:
    return isinstance(e, Const) and e.value == 1


# ---- folding constructors -------------------------------------------------


def add(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    if is_zero(a):
        return b
    if is_zero(b):
        return a
    return Add(a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    if is_zero(b):
        return a
    if is_zero(a):
        return neg(b)
    if a == b:
        return ZERO
    return Sub(a, b)


def neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def mul(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    if is_zero(a) or is_zero(b):
        return ZERO
    if _is_one(a):
        return b
    if _is_one(b):
        return a
    return Mul(a, b)


def div(a: Expr, b: Expr) -> Expr:
    if is_zero(b):
        raise PoleHit("division by the zero expression")
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value / b.value)
    if is_zero(a):
        return ZERO
    if _is_one(b):
        return a
    return Div(a, b)


def power(a: Expr, n: int) -> Expr:
    if int(n) != n:
        raise ValueError("only integer exponents are supported")
    n = int(n)
    if n == 0:
        return ONE
    if n == 1:
        return a
    if isinstance(a, Const):
        if a.value == 0 and n < 0:
            raise PoleHit("zero raised to a negative power")
        return Const(a.value**n)
    return Pow(a, n)


def exp(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(cmath.exp(a.value))
    return Exp(a)


def log(a: Expr) -> Expr:
    if isinstance(a, Const):
        if a.value == 0:
            raise PoleHit("log(0)")
        return Const(cmath.log(a.value))
    return Log(a)


# ---- polynomial structure and poles ---------------------------------------


def _poly(e: Expr):
    """Coefficients (lowest degree first) if ``e`` is a polynomial, else None."""
    P = np.polynomial.polynomial
    if isinstance(e, Const):
        return np.array([e.value])
    if isinstance(e, Var):
        return np.array([0j, 1])
    if isinstance(e, Neg):
        p = _poly(e.arg)
        return None if p is None else -p
    if isinstance(e, (Add, Sub, Mul)):
        p, q = _poly(e.left), _poly(e.right)
        if p is None or q is None:
            return None
        if isinstance(e, Add):
            return P.polyadd(p, q)
        if isinstance(e, Sub):
            return P.polysub(p, q)
        return P.polymul(p, q)
    if isinstance(e, Pow) and e.exponent >= 0:
        p = _poly(e.base)
        return None if p is None else P.polypow(p, e.exponent)
    return None


def _static_roots(e: Expr):
    p = _poly(e)
    if p is None:
        return None
    p = np.trim_zeros(np.asarray(p, dtype=complex), "b")
    deg = p.size - 1
    if deg < 1:
        return ()
    if deg > 4:
        return None
    return tuple(complex(r) for r in np.polynomial.polynomial.polyroots(p))


def _children(e: Expr):
    if isinstance(e, (Add, Sub, Mul)):
        return (e.left, e.right)
    if isinstance(e, Div):
        return (e.num, e.den)
    if isinstance(e, Pow):
        return (e.base,)
    if isinstance(e, (Neg, Exp, Log)):
        return (e.arg,)
    return ()


def _walk(e: Expr):
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(_children(node)))


def poles(e: Expr) -> tuple:
    """Statically known singular points (poles, and zeros of log arguments)."""
    found = []
    for node in _walk(e):
        for p in getattr(node, "pole_list", None) or ():
            if not any(abs(p - q) <= 1e-12 * (1 + abs(q)) for q in found):
                found.append(p)
    return tuple(found)


def denominators(e: Expr) -> list:
    """Denominators without a static pole list (to be searched numerically)."""
    out = []
    for node in _walk(e):
        if isinstance(node, Div) and node.pole_list is None:
            out.append(node.den)
        elif isinstance(node, Pow) and node.exponent < 0 and node.pole_list is None:
            out.append(node.base)
    return out


# ---- differentiation ------------------------------------------------------


def differentiate(e: Expr) -> Expr:
    """Exact derivative with respect to ``z``."""
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return ONE
    if isinstance(e, Add):
        return add(differentiate(e.left), differentiate(e.right))
    if isinstance(e, Sub):
        return sub(differentiate(e.left), differentiate(e.right))
    if isinstance(e, Neg):
        return neg(differentiate(e.arg))
    if isinstance(e, Mul):
        return add(mul(differentiate(e.left), e.right), mul(e.left, differentiate(e.right)))
    if isinstance(e, Div):
        dn, dd = differentiate(e.num), differentiate(e.den)
        if is_zero(dd):
            return div(dn, e.den)
        return div(sub(mul(dn, e.den), mul(e.num, dd)), power(e.den, 2))
    if isinstance(e, Pow):
        return mul(mul(Const(e.exponent), power(e.base, e.exponent - 1)), differentiate(e.base))
    if isinstance(e, Exp):
        return mul(differentiate(e.arg), e)
    if isinstance(e, Log):
        return div(differentiate(e.arg), e.arg)
    raise TypeError(f"unknown node {e!r}")


# ---- evaluation -----------------------------------------------------------


def eval_expr(e: Expr, z) -> complex:
    """Checked scalar evaluation.

    Raises
    ------
    PoleHit
        ``z`` is a registered pole or the value is not finite.
    """
    z = complex(z)
    for p in poles(e):
        if abs(z - p) <= 1e-14 * (1 + abs(p)):
            raise PoleHit(f"{to_text(e)} has a pole at {p!r}")
    val = e(z)
    if not (math.isfinite(val.real) and math.isfinite(val.imag)):
        raise PoleHit(f"{to_text(e)} is not finite at {z!r}")
    return val


# ---- printing -------------------------------------------------------------


def _fmt_const(c: complex) -> str:
    re_, im = c.real, c.imag
    if im == 0:
        s = repr(re_)
        return f"({s})" if re_ < 0 or s.startswith("-") else s
    if re_ == 0:
        s = f"{im!r}i"
        return f"({s})" if im < 0 else s
    sign = "-" if im < 0 else "+"
    return f"({re_!r}{sign}{abs(im)!r}i)"


def to_text(e: Expr) -> str:
    """Fully parenthesized text that :func:`parse_expr` reads back."""
    if isinstance(e, Const):
        return _fmt_const(e.value)
    if isinstance(e, Var):
        return "z"
    if isinstance(e, Add):
        return f"({to_text(e.left)} + {to_text(e.right)})"
    if isinstance(e, Sub):
        return f"({to_text(e.left)} - {to_text(e.right)})"
    if isinstance(e, Mul):
        return f"({to_text(e.left)} * {to_text(e.right)})"
    if isinstance(e, Div):
        return f"({to_text(e.num)} / {to_text(e.den)})"
    if isinstance(e, Pow):
        n = e.exponent
        return f"({to_text(e.base)}^{n if n >= 0 else f'({n})'})"
    if isinstance(e, Neg):
        return f"(-{to_text(e.arg)})"
    if isinstance(e, Exp):
        return f"exp({to_text(e.arg)})"
    if isinstance(e, Log):
        return f"log({to_text(e.arg)})"
    raise TypeError(f"unknown node {e!r}")


# ---- parsing --------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)(?P<imag>\s*i(?![A-Za-z0-9_]))?"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str):
    pos = 0
    out = []
    n = len(text)
    while True:
        while pos < n and text[pos].isspace():
            pos += 1
        if pos >= n:
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos)
        start = pos
        if m.group("num") is not None:
            val = float(m.group("num"))
            out.append(("num", 1j * val if m.group("imag") else complex(val), start))
        elif m.group("ident") is not None:
            out.append(("ident", m.group("ident"), start))
        else:
            out.append(("op", m.group("op"), start))
        pos = m.end()
    out.append(("end", None, n))
    return out


class _Parser:
    def __init__(self, text):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, op):
        kind, val, pos = self.take()
        if kind != "op" or val != op:
            raise ExprSyntaxError(f"expected {op!r}", pos)

    def parse(self):
        e = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {val!r}", pos)
        return e

    def expr(self):
        e = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            rhs = self.term()
            e = add(e, rhs) if op == "+" else sub(e, rhs)
        return e

    def term(self):
        e = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            _, op, pos = self.take()
            rhs = self.unary()
            if op == "*":
                e = mul(e, rhs)
            else:
                if is_zero(rhs):
                    raise ExprSyntaxError("division by zero", pos)
                e = div(e, rhs)
        return e

    def unary(self):
        kind, val, _ = self.peek()
        if kind == "op" and val in "+-":
            self.take()
            e = self.unary()
            return neg(e) if val == "-" else e
        return self.pow()

    def pow(self):
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            pos = self.take()[2]
            ex = self.unary()
            if not isinstance(ex, Const) or ex.value.imag != 0 or ex.value.real != int(ex.value.real):
                raise ExprSyntaxError("exponent must be an integer constant", pos)
            try:
                return power(base, int(ex.value.real))
            except PoleHit as exc:
                raise ExprSyntaxError(str(exc), pos) from None
        return base

    def atom(self):
        kind, val, pos = self.take()
        if kind == "num":
            return Const(val)
        if kind == "ident":
            if val == "z":
                return Z
            if val == "i":
                return Const(1j)
            if val in ("exp", "log"):
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                try:
                    return exp(arg) if val == "exp" else log(arg)
                except PoleHit as exc:
                    raise ExprSyntaxError(str(exc), pos) from None
            raise ExprSyntaxError(f"unknown identifier {val!r}", pos)
        if kind == "op" and val == "(":
            e = self.expr()
            self.expect(")")
            return e
        if kind == "end":
            raise ExprSyntaxError("unexpected end of input", pos)
        raise ExprSyntaxError(f"unexpected {val!r}", pos)


def parse_expr(text: str) -> Expr:
    """Parse expression text; raises ``ExprSyntaxError`` with the offset."""
    if isinstance(text, Expr):
        return text
    return _Parser(str(text)).parse()
