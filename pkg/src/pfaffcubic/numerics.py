"""High-precision complex scalars, tolerances, and univariate root finding.

Scalars are ``mpmath.mpc`` values evaluated at the working precision of
``mpmath.mp``. :func:`working_precision` sets that precision together with the
matching :class:`TolerancePolicy`; code that runs outside of it simply picks
up a policy derived from whatever ``mp.prec`` currently is.
"""

from __future__ import annotations

import contextvars
import math
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Iterable, Sequence

import mpmath
from mpmath import mp

from .errors import LeadingZero, NoConvergence, NumericalZeroDivision, SingularTransform

BigComplex = mpmath.mpc

DEFAULT_PRECISION = 256
ROOT_ITERATION_CAP = 2000


@dataclass(frozen=True)
class TolerancePolicy:
    precision_bits: int
    zero_eps: mpmath.mpf
    cert_eps: mpmath.mpf

    @classmethod
    def for_precision(cls, bits: int, cert_eps=None, zero_eps=None) -> "TolerancePolicy":
        floor = mpmath.ldexp(1, -bits + 16)
        if zero_eps is None:
            zero_eps = mpmath.ldexp(1, -bits + 32)
        if cert_eps is None:
            cert_eps = mpmath.ldexp(1, -(bits // 2))
        zero_eps = mpmath.mpf(zero_eps)
        cert_eps = mpmath.mpf(cert_eps)
        if zero_eps < floor or cert_eps < floor:
            raise ValueError(f"tolerances must be at least 2^(-{bits}+16)")
        return cls(bits, zero_eps, cert_eps)

    @property
    def hard_zero(self) -> mpmath.mpf:
        return mpmath.ldexp(1, -self.precision_bits + 16)


_policy: contextvars.ContextVar[TolerancePolicy | None] = contextvars.ContextVar(
    "pfaffcubic_policy", default=None
)


def policy() -> TolerancePolicy:
    """The tolerance policy in force for the current precision."""
    pol = _policy.get()
    if pol is None or pol.precision_bits != mp.prec:
        pol = TolerancePolicy.for_precision(mp.prec)
    return pol


@contextmanager
def working_precision(bits: int = DEFAULT_PRECISION, cert_eps=None):
    """Run a block at ``bits`` of precision with the matching tolerances."""
    with mp.workprec(bits):
        token = _policy.set(TolerancePolicy.for_precision(bits, cert_eps=cert_eps))
        try:
            yield policy()
        finally:
            _policy.reset(token)


def to_big(value) -> mpmath.mpc:
    """Coerce ints, floats, complex, strings, or ``[re, im]`` pairs to mpc."""
    if isinstance(value, mpmath.mpc):
        return +value
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ValueError(f"complex pair must have 2 entries, got {value!r}")
        return mpmath.mpc(_to_real(value[0]), _to_real(value[1]))
    if isinstance(value, complex):
        return mpmath.mpc(value.real, value.imag)
    return mpmath.mpc(_to_real(value), 0)


def _to_real(value):
    if isinstance(value, bool):
        raise ValueError("booleans are not numbers here")
    if isinstance(value, (int, float, mpmath.mpf)):
        return mpmath.mpf(value)
    if isinstance(value, str):
        return mpmath.mpf(value.strip())
    raise ValueError(f"cannot interpret {value!r} as a real number")


def div(a, b):
    """``a / b``, refusing divisors below the hard-zero floor."""
    if abs(b) < policy().hard_zero:
        raise NumericalZeroDivision(f"division by near-zero value {mpmath.nstr(abs(b), 5)}")
    return a / b


def principal_sqrt(v) -> mpmath.mpc:
    """Square root with Re >= 0, and Im >= 0 when Re == 0."""
    r = mpmath.sqrt(mpmath.mpc(v))
    if r.real < 0 or (r.real == 0 and r.imag < 0):
        r = -r
    return r


def principal_cbrt(v) -> mpmath.mpc:
    v = mpmath.mpc(v)
    if v == 0:
        return mpmath.mpc(0)
    return mpmath.exp(mpmath.log(v) / 3)


def horner(coeffs: Sequence, z):
    """Evaluate ``sum(coeffs[k] * z**k)``."""
    acc = mpmath.mpc(0)
    for c in reversed(coeffs):
        acc = acc * z + c
    return acc


def _horner_with_derivative(coeffs: Sequence, z):
    p = mpmath.mpc(0)
    dp = mpmath.mpc(0)
    for c in reversed(coeffs):
        dp = dp * z + p
        p = p * z + c
    return p, dp


def trim_leading(coeffs: Sequence, rel_eps=None) -> list:
    """Drop top coefficients that are negligible relative to the largest one."""
    coeffs = [mpmath.mpc(c) for c in coeffs]
    if rel_eps is None:
        rel_eps = mpmath.ldexp(1, -mp.prec + 40)
    scale = max((abs(c) for c in coeffs), default=0)
    while len(coeffs) > 1 and abs(coeffs[-1]) <= rel_eps * scale:
        coeffs.pop()
    return coeffs


def roots_univariate(coeffs: Sequence, max_iter: int = ROOT_ITERATION_CAP) -> list:
    """All roots of ``sum(coeffs[k] z^k)`` with multiplicity (Aberth-Ehrlich).

    ``coeffs`` is in ascending order of degree. Multiple roots come back as
    tight clusters; use :func:`cluster_roots` to recover their centroids.
    """
    coeffs = [mpmath.mpc(c) for c in coeffs]
    n = len(coeffs) - 1
    if n < 1:
        raise ValueError("need a polynomial of degree >= 1")
    scale = max(abs(c) for c in coeffs)
    pol = policy()
    if abs(coeffs[-1]) <= pol.zero_eps * scale or coeffs[-1] == 0:
        raise LeadingZero("leading coefficient vanishes; deflate before solving")
    lead = coeffs[-1]
    monic = [c / lead for c in coeffs]
    if n == 1:
        return [-monic[0]]

    abs_coeffs = [abs(c) for c in monic]
    eps = mpmath.ldexp(1, -mp.prec)
    step_tol = mpmath.ldexp(1, -mp.prec + 32)

    # Start on a circle around the root centroid; the 0.4 rad offset keeps
    # the guesses off any symmetry axis of real polynomials.
    center = -monic[n - 1] / n
    p_center = horner(monic, center)
    rho = abs(p_center) ** (mpmath.mpf(1) / n) if p_center != 0 else mpmath.mpf(1)
    if rho == 0:
        rho = mpmath.mpf(1)
    z = [
        center + rho * mpmath.expjpi(mpmath.mpf(2 * k) / n + mpmath.mpf("0.4") / mpmath.pi)
        for k in range(n)
    ]

    done = [False] * n
    for _ in range(max_iter):
        for k in range(n):
            if done[k]:
                continue
            zk = z[k]
            p, dp = _horner_with_derivative(monic, zk)
            if p == 0:
                done[k] = True
                continue
            bound = 8 * n * eps * horner(abs_coeffs, abs(zk)).real
            if abs(p) <= bound:
                done[k] = True
                continue
            repulsion = mpmath.mpc(0)
            for j in range(n):
                if j != k:
                    diff = zk - z[j]
                    if diff == 0:
                        diff = eps * (1 + abs(zk))
                    repulsion += 1 / diff
            if dp == 0:
                w = p / (-p * repulsion) if repulsion != 0 else rho * eps
            else:
                ratio = p / dp
                denom = 1 - ratio * repulsion
                w = ratio / denom if denom != 0 else ratio
            z[k] = zk - w
            if abs(w) <= step_tol * max(1, abs(z[k])):
                done[k] = True
        if all(done):
            return z
    raise NoConvergence(f"Aberth iteration did not converge in {max_iter} steps (degree {n})")


def cluster_roots(roots: Sequence, rel_tol=None) -> list[tuple[mpmath.mpc, int]]:
    """Group nearby roots; return ``(centroid, size)`` for each group."""
    if rel_tol is None:
        rel_tol = mpmath.ldexp(1, -mp.prec // 4)
    remaining = list(roots)
    out = []
    while remaining:
        group = [remaining.pop(0)]
        grew = True
        while grew:
            grew = False
            for r in list(remaining):
                if any(abs(r - g) <= rel_tol * max(1, abs(g)) for g in group):
                    group.append(r)
                    remaining.remove(r)
                    grew = True
        out.append((sum(group) / len(group), len(group)))
    return out


def derivative_coeffs(coeffs: Sequence, order: int = 1) -> list:
    out = list(coeffs)
    for _ in range(order):
        out = [k * out[k] for k in range(1, len(out))]
    return out


def polish_multiple_root(coeffs: Sequence, guess, multiplicity: int, steps: int = 60):
    """Newton on the (m-1)-th derivative, where an m-fold root is simple."""
    d = derivative_coeffs(coeffs, multiplicity - 1)
    if len(d) < 2:
        return guess
    z = mpmath.mpc(guess)
    tol = mpmath.ldexp(1, -mp.prec + 8)
    for _ in range(steps):
        p, dp = _horner_with_derivative(d, z)
        if dp == 0:
            break
        step = p / dp
        z -= step
        if abs(step) <= tol * max(1, abs(z)):
            break
    return z


def root_candidates(coeffs: Sequence, include_members: bool = True) -> list:
    """Roots plus polished cluster centroids, for callers that validate each one.

    Members of a cluster around a multiple root are only accurate to about
    eps**(1/m); the polished centroid is accurate to working precision.
    With ``include_members=False`` a cluster contributes only its centroid.
    """
    coeffs = trim_leading(coeffs)
    if len(coeffs) < 2:
        return []
    roots = roots_univariate(coeffs)
    clusters = cluster_roots(roots)
    out = list(roots) if include_members else [c for c, size in clusters if size == 1]
    for centroid, size in clusters:
        if size > 1:
            out.append(polish_multiple_root(coeffs, centroid, size))
    return out


# Small dense linear algebra on lists of lists.

def identity(n: int) -> list[list]:
    return [[mpmath.mpc(1 if i == j else 0) for j in range(n)] for i in range(n)]


def mat_mul(a, b) -> list[list]:
    inner = len(b)
    return [
        [mpmath.fsum(a[i][k] * b[k][j] for k in range(inner)) for j in range(len(b[0]))]
        for i in range(len(a))
    ]


def mat_inv(a) -> list[list]:
    """Gauss-Jordan inverse with partial pivoting."""
    n = len(a)
    aug = [[mpmath.mpc(x) for x in row] + identity(n)[i] for i, row in enumerate(a)]
    scale = max(abs(x) for row in a for x in row)
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(aug[r][col]))
        if abs(aug[piv][col]) <= policy().hard_zero * max(scale, 1):
            raise SingularTransform("matrix is numerically singular")
        aug[col], aug[piv] = aug[piv], aug[col]
        pv = aug[col][col]
        aug[col] = [x / pv for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                factor = aug[r][col]
                aug[r] = [x - factor * y for x, y in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


def det_numeric(a) -> mpmath.mpc:
    """Determinant by row reduction with partial pivoting."""
    m = [[mpmath.mpc(x) for x in row] for row in a]
    n = len(m)
    det = mpmath.mpc(1)
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(m[r][col]))
        if m[piv][col] == 0:
            return mpmath.mpc(0)
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
            det = -det
        pv = m[col][col]
        det *= pv
        for r in range(col + 1, n):
            if m[r][col] != 0:
                factor = m[r][col] / pv
                m[r] = [x - factor * y for x, y in zip(m[r], m[col])]
    return det


def transpose(a) -> list[list]:
    return [list(col) for col in zip(*a)]


def max_abs(values: Iterable) -> mpmath.mpf:
    return max((abs(v) for v in values), default=mpmath.mpf(0))


def cross3(a, b) -> list:
    return [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]


def projective_normalize(v) -> list:
    """Scale so the largest-magnitude coordinate (first on ties) equals 1."""
    mags = [abs(c) for c in v]
    top = max(mags)
    if top == 0:
        raise ValueError("zero vector has no projective normalization")
    k = mags.index(top)
    return [snap(c / v[k]) for c in v]


def snap(c, eps=None):
    """Zero out real or imaginary parts below ``eps`` (default zero_eps)."""
    eps = policy().zero_eps if eps is None else eps
    c = mpmath.mpc(c)
    re = c.real if abs(c.real) > eps else mpmath.mpf(0)
    im = c.imag if abs(c.imag) > eps else mpmath.mpf(0)
    return mpmath.mpc(re, im)


def to_float_str(x) -> str:
    """Short human-readable rendering of a real (for messages)."""
    return mpmath.nstr(x, 6)


def bits_of(x) -> float:
    """log2 of a magnitude, ``-inf`` for zero (diagnostics only)."""
    x = abs(x)
    return float(mpmath.log(x, 2)) if x else -math.inf
