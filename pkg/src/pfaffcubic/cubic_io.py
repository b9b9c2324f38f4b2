"""Cubic-surface input: expression parsing, the 20-slot coefficient vector, JSON."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

import mpmath
from mpmath import mp

from . import numerics
from .errors import CubicSyntaxError, NotHomogeneousDegree3, SchemaError, ZeroPolynomial
from .multipoly import MultiPoly, format_real

VARS = ("x", "y", "z", "t")

# Slot k (0-based) holds the coefficient of THETA_MONOMIALS[k], exponents in (x, y, z, t).
THETA_MONOMIALS: tuple[tuple[int, int, int, int], ...] = (
    (3, 0, 0, 0),  # x^3
    (0, 3, 0, 0),  # y^3
    (0, 0, 3, 0),  # z^3
    (0, 0, 0, 3),  # t^3
    (2, 1, 0, 0),  # x^2 y
    (1, 2, 0, 0),  # x y^2
    (2, 0, 1, 0),  # x^2 z
    (1, 0, 2, 0),  # x z^2
    (2, 0, 0, 1),  # x^2 t
    (1, 0, 0, 2),  # x t^2
    (0, 2, 1, 0),  # y^2 z
    (0, 1, 2, 0),  # y z^2
    (0, 2, 0, 1),  # y^2 t
    (0, 1, 0, 2),  # y t^2
    (0, 0, 2, 1),  # z^2 t
    (0, 0, 1, 2),  # z t^2
    (1, 1, 1, 0),  # x y z
    (1, 1, 0, 1),  # x y t
    (1, 0, 1, 1),  # x z t
    (0, 1, 1, 1),  # y z t
)
SLOT_OF = {exp: k for k, exp in enumerate(THETA_MONOMIALS)}


def theta_index(monomial: str) -> int:
    """1-based slot of a monomial written like ``"zt^2"`` or ``"xyz"``."""
    exp = [0, 0, 0, 0]
    for name, power in re.findall(r"([xyzt])(?:\^(\d+))?", monomial.replace("*", "")):
        exp[VARS.index(name)] += int(power or 1)
    return SLOT_OF[tuple(exp)] + 1


@dataclass(frozen=True)
class CubicSurface:
    theta: tuple

    def __post_init__(self):
        if len(self.theta) != 20:
            raise SchemaError(f"a cubic surface has 20 coefficients, got {len(self.theta)}")
        vals = tuple(numerics.to_big(c) for c in self.theta)
        object.__setattr__(self, "theta", vals)
        if all(abs(c) <= numerics.policy().zero_eps for c in vals):
            raise ZeroPolynomial("the cubic is identically zero")

    def __getitem__(self, k: int):
        """1-based access, ``c[16]`` is the z t^2 coefficient."""
        if not 1 <= k <= 20:
            raise IndexError("theta slots are numbered 1..20")
        return self.theta[k - 1]

    def scale(self) -> mpmath.mpf:
        return numerics.max_abs(self.theta)

    def to_poly(self) -> MultiPoly:
        return to_poly(self)

    def render(self) -> str:
        return render(self)


def to_poly(c: CubicSurface) -> MultiPoly:
    return MultiPoly(4, dict(zip(THETA_MONOMIALS, c.theta)))


def from_poly(p: MultiPoly) -> CubicSurface:
    if p.nvars != 4:
        raise NotHomogeneousDegree3("(arity)", -1)
    for exp in p.terms:
        if sum(exp) != 3:
            raise NotHomogeneousDegree3(monomial_name(exp), sum(exp))
    if p.is_zero():
        raise ZeroPolynomial("the cubic is identically zero")
    return CubicSurface(tuple(p.coeff(exp) for exp in THETA_MONOMIALS))


def monomial_name(exp: Sequence[int]) -> str:
    parts = []
    for name, k in zip(VARS, exp):
        if k == 1:
            parts.append(name)
        elif k > 1:
            parts.append(f"{name}^{k}")
    return "*".join(parts) or "1"


def render(c: CubicSurface) -> str:
    return to_poly(c).render()


# ---------------------------------------------------------------- parser

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?i?)
  | (?P<imag>i)
  | (?P<var>[xyzt])
  | (?P<op>[-+*^()])
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise CubicSyntaxError(f"unexpected character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind, m.group(), pos))
        pos = m.end()
    toks.append(_Tok("end", "", len(text)))
    return toks


class _Parser:
    """expr := term (('+'|'-') term)*
    term := unary ('*' unary)*
    unary := ('-'|'+') unary | power
    power := atom ('^' exponent)?
    atom := number | variable | '(' expr ')'
    """

    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def take(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def error(self, message: str, tok: _Tok | None = None):
        tok = tok or self.peek()
        raise CubicSyntaxError(message, tok.pos, self.text)

    def parse(self) -> MultiPoly:
        if self.peek().kind == "end":
            self.error("empty expression")
        out = self.expr()
        tok = self.peek()
        if tok.kind != "end":
            if tok.kind in ("num", "imag", "var") or tok.text == "(":
                self.error("implicit multiplication is not allowed; use '*'", tok)
            self.error(f"unexpected {tok.text!r}", tok)
        return out

    def expr(self) -> MultiPoly:
        out = self.term()
        while self.peek().text in ("+", "-"):
            op = self.take().text
            rhs = self.term()
            out = out + rhs if op == "+" else out - rhs
        return out

    def term(self) -> MultiPoly:
        out = self.unary()
        while True:
            tok = self.peek()
            if tok.text == "*":
                self.take()
                out = out * self.unary()
            elif tok.kind in ("num", "imag", "var") or tok.text == "(":
                self.error("implicit multiplication is not allowed; use '*'", tok)
            else:
                return out

    def unary(self) -> MultiPoly:
        tok = self.peek()
        if tok.text == "-":
            self.take()
            return -self.unary()
        if tok.text == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> MultiPoly:
        base = self.atom()
        if self.peek().text == "^":
            self.take()
            tok = self.take()
            if tok.kind != "num" or not tok.text.isdigit():
                self.error("exponent must be a non-negative integer literal", tok)
            k = int(tok.text)
            if k > 12:
                self.error("exponent too large", tok)
            if self.peek().text == "^":
                self.error("chained exponents are not allowed", self.peek())
            base = base**k
        return base

    def atom(self) -> MultiPoly:
        tok = self.take()
        if tok.kind == "num":
            text = tok.text
            if text.endswith("i"):
                return MultiPoly.constant(mpmath.mpc(0, mpmath.mpf(text[:-1])), 4)
            return MultiPoly.constant(mpmath.mpf(text), 4)
        if tok.kind == "imag":
            return MultiPoly.constant(mpmath.mpc(0, 1), 4)
        if tok.kind == "var":
            return MultiPoly.variable(VARS.index(tok.text), 4)
        if tok.text == "(":
            inner = self.expr()
            close = self.take()
            if close.text != ")":
                self.error("expected ')'", close)
            return inner
        if tok.kind == "end":
            self.error("unexpected end of expression", tok)
        self.error(f"unexpected {tok.text!r}", tok)


def parse_expression(text: str) -> MultiPoly:
    """Parse an arithmetic expression in x, y, z, t into a 4-variable polynomial."""
    return _Parser(text).parse()


def parse_cubic(text: str) -> CubicSurface:
    p = parse_expression(text)
    if p.is_zero():
        raise ZeroPolynomial(f"{text!r} expands to the zero polynomial")
    return from_poly(p)


# ---------------------------------------------------------------- JSON

def real_str(x) -> str:
    """Decimal string with enough digits to reproduce the binary value."""
    return format_real(x, mpmath.libmp.repr_dps(mp.prec))


def complex_pair(c) -> list[str]:
    c = mpmath.mpc(c)
    return [real_str(c.real), real_str(c.imag)]


def parse_complex_pair(value, where: str = "value") -> mpmath.mpc:
    if isinstance(value, (list, tuple)) and len(value) == 2:
        try:
            return numerics.to_big(value)
        except (ValueError, TypeError) as exc:
            raise SchemaError(f"{where}: {exc}") from None
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return mpmath.mpc(value)
    raise SchemaError(f"{where}: expected [re, im], got {value!r}")


def matrix_to_json(m) -> list:
    return [[complex_pair(x) for x in row] for row in m]


def matrix_from_json(data, rows: int, cols: int, where: str) -> list[list]:
    if not isinstance(data, list) or len(data) != rows:
        raise SchemaError(f"{where}: expected {rows} rows")
    out = []
    for i, row in enumerate(data):
        if not isinstance(row, list) or len(row) != cols:
            raise SchemaError(f"{where}[{i}]: expected {cols} entries")
        out.append([parse_complex_pair(x, f"{where}[{i}][{j}]") for j, x in enumerate(row)])
    return out


def cubic_from_json(obj) -> CubicSurface:
    """Read the ``"cubic"`` field: an expression string or ``{"theta": [...]}``."""
    if isinstance(obj, str):
        return parse_cubic(obj)
    if isinstance(obj, dict) and "theta" in obj:
        theta = obj["theta"]
        if not isinstance(theta, list) or len(theta) != 20:
            raise SchemaError("theta must be a list of 20 [re, im] pairs")
        return CubicSurface(tuple(parse_complex_pair(v, f"theta[{k}]") for k, v in enumerate(theta)))
    raise SchemaError('"cubic" must be an expression string or {"theta": [...]}')


def cubic_to_json(c: CubicSurface) -> dict:
    return {"theta": [complex_pair(v) for v in c.theta]}


def read_request(obj) -> dict:
    """Validate one input object ``{"cubic": ..., "precision_bits"?, "seed"?}``."""
    if not isinstance(obj, dict):
        raise SchemaError("input must be a JSON object")
    if "cubic" not in obj:
        raise SchemaError('missing "cubic"')
    out = {"cubic": obj["cubic"]}
    for key in ("precision_bits", "seed"):
        if key in obj and obj[key] is not None:
            if not isinstance(obj[key], int) or isinstance(obj[key], bool):
                raise SchemaError(f'"{key}" must be an integer')
            out[key] = obj[key]
    return out
