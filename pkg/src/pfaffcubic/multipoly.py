"""Sparse multivariate polynomials over mpc, in up to four variables."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import mpmath
from mpmath import mp

from . import numerics
from .errors import ArityMismatch, SingularTransform

VARIABLE_NAMES = {
    1: ("u",),
    2: ("u", "v"),
    3: ("x", "z", "t"),
    4: ("x", "y", "z", "t"),
}


def graded_lex_key(exp: tuple[int, ...]):
    return (-sum(exp), tuple(-e for e in exp))


class MultiPoly:
    """Immutable sparse polynomial: exponent tuple -> mpc coefficient.

    Every constructor drops coefficients with magnitude below the current
    ``zero_eps`` unless ``cleanup=False``.
    """

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms: Mapping | None = None, cleanup: bool = True):
        if nvars not in (1, 2, 3, 4):
            raise ValueError("MultiPoly supports 1 to 4 variables")
        self.nvars = nvars
        out = {}
        if terms:
            for exp, c in terms.items():
                exp = tuple(int(e) for e in exp)
                if len(exp) != nvars or any(e < 0 for e in exp):
                    raise ValueError(f"bad exponent {exp} for {nvars} variables")
                c = mpmath.mpc(c)
                if c != 0:
                    out[exp] = c
        self.terms = out
        if cleanup:
            self._cleanup_in_place(numerics.policy().zero_eps)

    def _cleanup_in_place(self, eps):
        dead = [e for e, c in self.terms.items() if abs(c) < eps]
        for e in dead:
            del self.terms[e]

    # constructors
    @classmethod
    def zero(cls, nvars: int) -> "MultiPoly":
        return cls(nvars)

    @classmethod
    def constant(cls, value, nvars: int) -> "MultiPoly":
        return cls(nvars, {(0,) * nvars: value})

    @classmethod
    def variable(cls, index: int, nvars: int) -> "MultiPoly":
        exp = [0] * nvars
        exp[index] = 1
        return cls(nvars, {tuple(exp): 1})

    @classmethod
    def linear_form(cls, coeffs: Sequence) -> "MultiPoly":
        n = len(coeffs)
        terms = {}
        for i, c in enumerate(coeffs):
            exp = [0] * n
            exp[i] = 1
            terms[tuple(exp)] = c
        return cls(n, terms)

    @classmethod
    def from_univariate(cls, coeffs: Sequence) -> "MultiPoly":
        return cls(1, {(k,): c for k, c in enumerate(coeffs)})

    # queries
    def is_zero(self) -> bool:
        return not self.terms

    def coeff(self, exp: Iterable[int]) -> mpmath.mpc:
        return self.terms.get(tuple(exp), mpmath.mpc(0))

    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    def degree_in(self, var: int) -> int:
        return max((e[var] for e in self.terms), default=-1)

    def is_homogeneous(self, degree: int | None = None) -> bool:
        degs = {sum(e) for e in self.terms}
        if not degs:
            return True
        if len(degs) != 1:
            return False
        return degree is None or degs == {degree}

    def max_abs(self) -> mpmath.mpf:
        return numerics.max_abs(self.terms.values())

    def sorted_terms(self) -> list[tuple[tuple[int, ...], mpmath.mpc]]:
        return sorted(self.terms.items(), key=lambda kv: graded_lex_key(kv[0]))

    def cleanup(self, eps=None) -> "MultiPoly":
        out = MultiPoly(self.nvars, self.terms, cleanup=False)
        out._cleanup_in_place(numerics.policy().zero_eps if eps is None else eps)
        return out

    # ring operations
    def _check(self, other: "MultiPoly"):
        if other.nvars != self.nvars:
            raise ArityMismatch(f"{self.nvars}-variable and {other.nvars}-variable polynomials")

    def _coerce(self, other) -> "MultiPoly":
        if isinstance(other, MultiPoly):
            self._check(other)
            return other
        return MultiPoly.constant(other, self.nvars)

    def __add__(self, other) -> "MultiPoly":
        other = self._coerce(other)
        terms = dict(self.terms)
        for e, c in other.terms.items():
            terms[e] = terms.get(e, 0) + c
        return MultiPoly(self.nvars, terms)

    __radd__ = __add__

    def __neg__(self) -> "MultiPoly":
        return MultiPoly(self.nvars, {e: -c for e, c in self.terms.items()}, cleanup=False)

    def __sub__(self, other) -> "MultiPoly":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "MultiPoly":
        return self._coerce(other) - self

    def __mul__(self, other) -> "MultiPoly":
        if not isinstance(other, MultiPoly):
            c = mpmath.mpc(other)
            return MultiPoly(self.nvars, {e: c * v for e, v in self.terms.items()})
        self._check(other)
        terms: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                terms[e] = terms.get(e, 0) + c1 * c2
        return MultiPoly(self.nvars, terms)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "MultiPoly":
        if not isinstance(n, int) or n < 0:
            raise ValueError("only non-negative integer powers")
        out = MultiPoly.constant(1, self.nvars)
        for _ in range(n):
            out = out * self
        return out

    def diff(self, var: int) -> "MultiPoly":
        terms = {}
        for e, c in self.terms.items():
            if e[var]:
                ne = list(e)
                ne[var] -= 1
                terms[tuple(ne)] = c * e[var]
        return MultiPoly(self.nvars, terms)

    # evaluation and substitution
    def __call__(self, *point):
        return evaluate(self, point)

    def specialize(self, var: int, value) -> "MultiPoly":
        """Fix one variable to a constant, keeping the arity."""
        value = mpmath.mpc(value)
        terms: dict = {}
        for e, c in self.terms.items():
            ne = list(e)
            k = ne[var]
            ne[var] = 0
            key = tuple(ne)
            terms[key] = terms.get(key, 0) + c * value**k
        return MultiPoly(self.nvars, terms)

    def drop_variable(self, var: int) -> "MultiPoly":
        """Remove a variable that no longer occurs."""
        if self.degree_in(var) > 0:
            raise ValueError(f"variable {var} still occurs")
        return MultiPoly(
            self.nvars - 1,
            {e[:var] + e[var + 1:]: c for e, c in self.terms.items()},
            cleanup=False,
        )

    def univariate_coeffs(self) -> list:
        """Ascending coefficient list of a 1-variable polynomial."""
        if self.nvars != 1:
            raise ArityMismatch("univariate_coeffs needs a 1-variable polynomial")
        deg = max(self.degree(), 0)
        return [self.coeff((k,)) for k in range(deg + 1)]

    def coeffs_in(self, var: int) -> list["MultiPoly"]:
        """Write self = sum_k c_k * v_var^k; returns [c_0, ..., c_d] with v_var removed."""
        d = self.degree_in(var)
        buckets: list[dict] = [{} for _ in range(max(d, 0) + 1)]
        for e, c in self.terms.items():
            buckets[e[var]][e[:var] + e[var + 1:]] = c
        return [MultiPoly(self.nvars - 1, b, cleanup=False) for b in buckets]

    # rendering
    def render(self, names: Sequence[str] | None = None, digits: int | None = None) -> str:
        """Canonical text: graded-lex terms ``(re+imi)*x^a*y^b``.

        The output parses back with :func:`pfaffcubic.cubic_io.parse_expression`.
        """
        if names is None:
            names = VARIABLE_NAMES[self.nvars]
        if digits is None:
            digits = mpmath.libmp.prec_to_dps(mp.prec)
        if not self.terms:
            return "(0.0+0.0i)"
        parts = []
        for exp, c in self.sorted_terms():
            factors = [format_complex(c, digits)]
            for name, k in zip(names, exp):
                if k == 1:
                    factors.append(name)
                elif k > 1:
                    factors.append(f"{name}^{k}")
            parts.append("*".join(factors))
        return " + ".join(parts)

    def __repr__(self) -> str:
        return f"MultiPoly({self.render(digits=8)})"


def format_real(x, digits: int) -> str:
    return mpmath.nstr(mpmath.mpf(x), digits)


def format_complex(c, digits: int) -> str:
    re = format_real(c.real, digits)
    im = format_real(c.imag, digits)
    if not im.startswith("-"):
        im = "+" + im
    return f"({re}{im}i)"


def evaluate(p: MultiPoly, point: Sequence) -> mpmath.mpc:
    """Nested Horner evaluation, one variable at a time."""
    if len(point) != p.nvars:
        raise ArityMismatch(f"point has {len(point)} coordinates, polynomial has {p.nvars} variables")
    pts = [mpmath.mpc(v) for v in point]
    return _horner_nested(list(p.terms.items()), pts, 0)


def _horner_nested(items, point, var):
    if var == len(point):
        return mpmath.fsum(c for _, c in items) if items else mpmath.mpc(0)
    groups: dict[int, list] = {}
    for e, c in items:
        groups.setdefault(e[var], []).append((e, c))
    if not groups:
        return mpmath.mpc(0)
    acc = mpmath.mpc(0)
    x = point[var]
    for k in range(max(groups), -1, -1):
        inner = _horner_nested(groups[k], point, var + 1) if k in groups else 0
        acc = acc * x + inner
    return acc


def differences(p: MultiPoly, q: MultiPoly) -> mpmath.mpf:
    """Largest coefficient of p - q, computed without cleanup."""
    if p.nvars != q.nvars:
        raise ArityMismatch("arity mismatch")
    keys = set(p.terms) | set(q.terms)
    return numerics.max_abs(p.coeff(k) - q.coeff(k) for k in keys)


@dataclass(frozen=True)
class LinearChange:
    """Invertible matrix acting on row vectors: p -> p(v . A)."""

    matrix: tuple
    inverse: tuple = field(repr=False, compare=False, default=())

    def __post_init__(self):
        m = tuple(tuple(mpmath.mpc(x) for x in row) for row in self.matrix)
        n = len(m)
        if any(len(row) != n for row in m):
            raise ValueError("LinearChange needs a square matrix")
        object.__setattr__(self, "matrix", m)
        pol = numerics.policy()
        if abs(numerics.det_numeric(m)) <= pol.zero_eps:
            raise SingularTransform("linear change is not invertible")
        inv = numerics.mat_inv(m)
        prod = numerics.mat_mul(m, inv)
        # Entrywise check, scaled by the norms so large matrices are judged fairly.
        norm = max(sum(abs(x) for x in row) for row in m)
        inorm = max(sum(abs(x) for x in row) for row in inv)
        bound = mpmath.ldexp(1, -mp.prec + 24) * max(1, norm * inorm)
        err = numerics.max_abs(prod[i][j] - (1 if i == j else 0) for i in range(n) for j in range(n))
        if err > bound:
            raise SingularTransform(f"inverse check failed (residual {numerics.to_float_str(err)})")
        object.__setattr__(self, "inverse", tuple(tuple(row) for row in inv))

    @property
    def dim(self) -> int:
        return len(self.matrix)

    @classmethod
    def identity(cls, n: int) -> "LinearChange":
        return cls(numerics.identity(n))

    def inverted(self) -> "LinearChange":
        return LinearChange(self.inverse)

    def __matmul__(self, other: "LinearChange") -> "LinearChange":
        return LinearChange(numerics.mat_mul(self.matrix, other.matrix))


def substitute_linear(p: MultiPoly, change) -> MultiPoly:
    """Return ``p o A``, i.e. ``v -> p(v . A)`` for row vectors v."""
    a = change.matrix if isinstance(change, LinearChange) else change
    n = p.nvars
    if len(a) != n:
        raise ArityMismatch(f"{len(a)}x{len(a)} change applied to {n}-variable polynomial")
    # New coordinate i is the linear form given by column i of A.
    forms = [MultiPoly.linear_form([a[j][i] for j in range(n)]) for i in range(n)]
    return compose(p, forms)


def compose(p: MultiPoly, forms: Sequence[MultiPoly]) -> MultiPoly:
    """Substitute ``forms[i]`` for variable i; the result has the forms' arity."""
    if len(forms) != p.nvars:
        raise ArityMismatch(f"{len(forms)} substitutions for {p.nvars} variables")
    m = forms[0].nvars
    powers: list[list[MultiPoly]] = [[MultiPoly.constant(1, m)] for _ in forms]

    def power(i, k):
        while len(powers[i]) <= k:
            powers[i].append(powers[i][-1] * forms[i])
        return powers[i][k]

    terms: dict = {}
    for exp, c in p.terms.items():
        prod = MultiPoly.constant(c, m)
        for i, k in enumerate(exp):
            if k:
                prod = prod * power(i, k)
        for e, v in prod.terms.items():
            terms[e] = terms.get(e, 0) + v
    return MultiPoly(m, terms)


def restrict_to_line(p: MultiPoly, direction: Sequence, base: Sequence) -> list:
    """Ascending coefficients of ``s -> p(s * direction + base)``."""
    forms = [MultiPoly(1, {(1,): d, (0,): b}) for d, b in zip(direction, base)]
    return compose(p, forms).univariate_coeffs()


def poly_det(matrix: Sequence[Sequence[MultiPoly]], nvars: int) -> MultiPoly:
    """Determinant of a square matrix of polynomials by memoized Laplace expansion.

    Expands along rows top to bottom; minors are keyed by the set of columns
    still available, so each is computed once.
    """
    n = len(matrix)
    if n == 0:
        return MultiPoly.constant(1, nvars)
    memo: dict[int, MultiPoly] = {}
    full = (1 << n) - 1

    def minor(mask: int) -> MultiPoly:
        # rows n - popcount(mask) .. n-1 against the columns in mask
        if mask == 0:
            return MultiPoly.constant(1, nvars)
        if mask in memo:
            return memo[mask]
        row = n - bin(mask).count("1")
        total: dict = {}
        sign = 1
        for col in range(n):
            if not mask >> col & 1:
                continue
            entry = matrix[row][col]
            if not entry.is_zero():
                sub = minor(mask & ~(1 << col))
                if not sub.is_zero():
                    for e, c in (entry * sub).terms.items():
                        total[e] = total.get(e, 0) + sign * c
            sign = -sign
        out = MultiPoly(nvars, total)
        memo[mask] = out
        return out

    return minor(full)


def hessian3(p: MultiPoly) -> MultiPoly:
    """Determinant of the matrix of second partials of a ternary form."""
    if p.nvars != 3:
        raise ArityMismatch("hessian3 needs a 3-variable polynomial")
    first = [p.diff(i) for i in range(3)]
    second = [[first[i].diff(j) for j in range(3)] for i in range(3)]
    return poly_det(second, 3)


def resultant_bivariate(p: MultiPoly, q: MultiPoly, eliminate: int = 0) -> MultiPoly:
    """Sylvester resultant of two bivariate polynomials with respect to one variable.

    Returns a 1-variable polynomial in the kept variable. The sign is that of
    the standard Sylvester determinant, rows of p first.
    """
    if p.nvars != 2 or q.nvars != 2:
        raise ArityMismatch("resultant_bivariate needs 2-variable polynomials")
    m = p.degree_in(eliminate)
    n = q.degree_in(eliminate)
    if m <= 0 and n <= 0:
        raise ValueError("both polynomials are constant in the eliminated variable")
    pc = p.coeffs_in(eliminate)
    qc = q.coeffs_in(eliminate)
    size = m + n
    zero = MultiPoly.zero(1)
    rows = []
    for i in range(n):
        row = [zero] * size
        for k in range(m + 1):
            row[i + k] = pc[m - k]
        rows.append(row)
    for i in range(m):
        row = [zero] * size
        for k in range(n + 1):
            row[i + k] = qc[n - k]
        rows.append(row)
    return poly_det(rows, 1)


def divide_linear(p: MultiPoly, form: Sequence) -> tuple[MultiPoly, MultiPoly]:
    """Divide by the linear form ``sum(form[i] * v_i)``.

    Synthetic division in the variable whose coefficient in the form is
    largest. Returns ``(quotient, remainder)``; the remainder does not
    involve that variable.
    """
    n = p.nvars
    if len(form) != n:
        raise ArityMismatch("linear form and polynomial arity differ")
    form = [mpmath.mpc(c) for c in form]
    k = max(range(n), key=lambda i: abs(form[i]))
    lead = form[k]
    if lead == 0:
        raise ValueError("zero linear form")
    # v_k = r + (form / lead) with r = -(sum_{i != k} form_i v_i) / lead
    root = MultiPoly.linear_form([0 if i == k else -form[i] / lead for i in range(n)])
    parts = p.coeffs_in(k)
    d = len(parts) - 1
    lift = [_insert_variable(c, k) for c in parts]
    if d <= 0:
        return MultiPoly.zero(n), p
    b = [None] * d
    b[d - 1] = lift[d]
    for j in range(d - 1, 0, -1):
        b[j - 1] = lift[j] + root * b[j]
    remainder = lift[0] + root * b[0]
    vk = MultiPoly.variable(k, n)
    quotient = MultiPoly.zero(n)
    for j in range(d - 1, -1, -1):
        quotient = quotient * vk + b[j]
    return quotient * (1 / lead), remainder


def _insert_variable(p: MultiPoly, var: int) -> MultiPoly:
    return MultiPoly(
        p.nvars + 1,
        {e[:var] + (0,) + e[var:]: c for e, c in p.terms.items()},
        cleanup=False,
    )
