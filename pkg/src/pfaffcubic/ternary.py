"""Plane cubics in (x, z, t): lines, flexes, and reduction to the shape

    x^3 + l8*x*z^2 + l3*z^3 - t^2*z + l7*x^2*z

with an explicit 3x3 change of variables, plus classification labels.
"""

from __future__ import annotations

import random
import warnings
from dataclasses import dataclass, field

import mpmath

from . import numerics
from .cubic_io import THETA_MONOMIALS, CubicSurface
from .errors import CertificationFailed, DegenerateTangent, IllConditionedWarning, NoFlexFound
from .multipoly import (
    LinearChange,
    MultiPoly,
    differences,
    divide_linear,
    evaluate,
    hessian3,
    restrict_to_line,
    resultant_bivariate,
    substitute_linear,
)

# 1-based theta slots that survive y = 0
SLICE_SLOTS = (1, 3, 4, 7, 8, 9, 10, 15, 16, 19)

X3, Z3, T3 = (3, 0, 0), (0, 3, 0), (0, 0, 3)
X2Z, XZ2, ZT2 = (2, 1, 0), (1, 2, 0), (0, 1, 2)
XZT, Z2T, X2T, XT2 = (1, 1, 1), (0, 2, 1), (2, 0, 1), (1, 0, 2)

CANONICAL_SHAPE = {X3, XZ2, Z3, ZT2, X2Z}

IRREDUCIBLE_FORMS = {
    1: "x^3+a*x*z^2+z^3-t^2*z",
    2: "x^3+x*z^2-t^2*z",
    3: "x^3+z^3-t^2*z",
    4: "x^3-t^2*z",
    5: "x^3+x^2*z-t^2*z",
}
REDUCIBLE_FORMS = {
    1: "z*(x^2+t*z)",
    2: "z*(x^2+t^2+z^2)",
    3: "x*t*z",
    4: "x*t*(x+t)",
    5: "x^2*t",
    6: "x^3",
}

AMBIGUITY_BAND = 1000


def slice_y0(c: CubicSurface) -> MultiPoly:
    """The ternary cubic f(x, 0, z, t) in variables (x, z, t)."""
    terms = {}
    for slot in SLICE_SLOTS:
        a, b, cz, d = THETA_MONOMIALS[slot - 1]
        assert b == 0
        terms[(a, cz, d)] = c[slot]
    return MultiPoly(3, terms)


def canonical_ternary(lam3, lam7, lam8) -> MultiPoly:
    return MultiPoly(3, {X3: 1, XZ2: lam8, Z3: lam3, ZT2: -1, X2Z: lam7})


@dataclass(frozen=True)
class CanonLabel:
    family: str  # "I" or "II"
    index: int
    form: str
    alpha: mpmath.mpc | None = None
    ambiguous: bool = False

    @property
    def name(self) -> str:
        return f"{self.family}{self.index}"

    def to_json(self) -> dict:
        from .cubic_io import complex_pair

        out = {"family": self.family, "index": self.index, "form": self.form,
               "ambiguous": self.ambiguous}
        if self.alpha is not None:
            out["alpha"] = complex_pair(self.alpha)
        return out


@dataclass(frozen=True)
class CanonicalTernary:
    lam3: mpmath.mpc
    lam7: mpmath.mpc
    lam8: mpmath.mpc
    transform: LinearChange
    label: CanonLabel
    flex: tuple = ()
    residual: mpmath.mpf = field(default_factory=lambda: mpmath.mpf(0))

    def form(self) -> MultiPoly:
        return canonical_ternary(self.lam3, self.lam7, self.lam8)


# ---------------------------------------------------------------- lines

def _generic_vectors(seed: int, count: int, dim: int = 3) -> list[list[mpmath.mpc]]:
    rng = random.Random(seed)
    return [
        [mpmath.mpc(rng.uniform(-1, 1), rng.uniform(-1, 1)) for _ in range(dim)]
        for _ in range(count)
    ]


def _points_on_line(p: MultiPoly, direction, base) -> list[list]:
    coeffs = restrict_to_line(p, direction, base)
    roots = numerics.root_candidates(coeffs, include_members=False)
    pts = [[s * d + b for d, b in zip(direction, base)] for s in roots]
    if len(numerics.trim_leading(coeffs)) < len(coeffs):
        # p vanishes (numerically) at the point at infinity of the line
        pts.append(list(direction))
    return pts


def line_remainder(p: MultiPoly, line) -> mpmath.mpf:
    """Relative size of the remainder of p modulo a linear form."""
    _, rem = divide_linear(p, line)
    return rem.max_abs() / p.max_abs()


def _dedupe(vectors, tol) -> list[list]:
    out: list[list] = []
    for v in vectors:
        if not any(max(abs(a - b) for a, b in zip(v, w)) <= tol for w in out):
            out.append(v)
    return out


def find_lines(p: MultiPoly) -> list[list[mpmath.mpc]]:
    """All distinct lines u*x + v*z + w*t = 0 dividing the ternary cubic p.

    Lines are returned as coefficient triples normalized so the largest
    coefficient is 1. Candidates come from joining the points where p meets
    two fixed generic lines; each is confirmed by division.
    """
    if p.nvars != 3 or p.is_zero():
        raise ValueError("find_lines needs a nonzero ternary form")
    pol = numerics.policy()
    pn = p * (1 / p.max_abs())
    d1, b1, d2, b2 = _generic_vectors(0x1F1E5, 4)
    first = _points_on_line(pn, d1, b1)
    second = _points_on_line(pn, d2, b2)
    found = []
    for a in first:
        for b in second:
            ell = numerics.cross3(a, b)
            if numerics.max_abs(ell) <= pol.zero_eps:
                continue
            ell = numerics.projective_normalize(ell)
            rem = line_remainder(pn, ell)
            if rem <= pol.cert_eps:
                found.append((rem, ell))
            elif rem <= AMBIGUITY_BAND * pol.cert_eps:
                warnings.warn(
                    f"line candidate remainder {numerics.to_float_str(rem)} is just above threshold",
                    IllConditionedWarning,
                    stacklevel=2,
                )
    found.sort(key=lambda rl: rl[0])
    lines = _dedupe([ell for _, ell in found], 10 * pol.cert_eps)
    lines.sort(key=_magnitude_key)
    return lines[:3]


def _magnitude_key(v):
    return tuple(
        (round(float(abs(c)), 12), round(float(c.real), 12), round(float(c.imag), 12)) for c in v
    )


def is_irreducible(p: MultiPoly) -> bool:
    return not p.is_zero() and not find_lines(p)


# ---------------------------------------------------------------- flexes

def _gradient(p: MultiPoly):
    return [p.diff(i) for i in range(p.nvars)]


def _polish_point(a: MultiPoly, b: MultiPoly, grads, x, z, steps: int = 60):
    """Newton on the affine system a(x, z) = b(x, z) = 0."""
    tol = mpmath.ldexp(1, -mpmath.mp.prec + 8)
    (ax, az), (bx, bz) = grads
    last = None
    for _ in range(steps):
        fa, fb = evaluate(a, (x, z)), evaluate(b, (x, z))
        j11, j12 = evaluate(ax, (x, z)), evaluate(az, (x, z))
        j21, j22 = evaluate(bx, (x, z)), evaluate(bz, (x, z))
        det = j11 * j22 - j12 * j21
        if det == 0 or abs(det) <= numerics.policy().hard_zero:
            break
        dx = (fa * j22 - fb * j12) / det
        dz = (j11 * fb - j21 * fa) / det
        x, z = x - dx, z - dz
        step = max(abs(dx), abs(dz))
        if step <= tol * (1 + abs(x) + abs(z)):
            break
        if last is not None and step > last / 2 and step < 1e-3:
            break  # linear convergence: a singular point, not a flex
        last = step
    return x, z


def find_flexes(p: MultiPoly) -> list[list[mpmath.mpc]]:
    """Smooth inflection points of p, best first.

    Common zeros of p and its Hessian are found in generic coordinates by a
    resultant, polished by Newton's method, and filtered for smoothness.
    Ordering: larger gradient norm first, then magnitude-lex of coordinates.
    """
    pol = numerics.policy()
    pn = p * (1 / p.max_abs())
    hess = hessian3(pn)
    if hess.is_zero():
        raise NoFlexFound("Hessian vanishes identically")
    hn = hess * (1 / hess.max_abs())
    grad = _gradient(pn)
    smooth_tol = mpmath.ldexp(1, -pol.precision_bits // 4)
    prefilter = mpmath.ldexp(1, -pol.precision_bits // 8)

    found: list[tuple] = []
    for attempt in range(3):
        g = _generic_vectors(0xF1E7 + attempt, 3)
        pg = substitute_linear(pn, g)
        hg = substitute_linear(hn, g)
        a = pg.specialize(2, 1).drop_variable(2)
        b = hg.specialize(2, 1).drop_variable(2)
        grads = ((a.diff(0), a.diff(1)), (b.diff(0), b.diff(1)))
        res = resultant_bivariate(a, b, eliminate=0)
        if res.is_zero():
            continue
        for z0 in numerics.root_candidates(res.univariate_coeffs()):
            xs = numerics.root_candidates(a.specialize(1, z0).drop_variable(1).univariate_coeffs())
            for x0 in xs:
                if abs(evaluate(b, (x0, z0))) > prefilter:
                    continue
                q0 = [x0 * g[0][k] + z0 * g[1][k] + g[2][k] for k in range(3)]
                q0 = numerics.projective_normalize(q0)
                if max(abs(evaluate(d, q0)) for d in grad) <= prefilter:
                    continue  # near a singular point
                x1, z1 = _polish_point(a, b, grads, x0, z0)
                q = [x1 * g[0][k] + z1 * g[1][k] + g[2][k] for k in range(3)]
                q = numerics.projective_normalize(q)
                if abs(evaluate(pn, q)) > pol.cert_eps or abs(evaluate(hn, q)) > pol.cert_eps:
                    continue
                gnorm = max(abs(evaluate(d, q)) for d in grad)
                if gnorm <= smooth_tol:
                    continue
                found.append((gnorm, q))
        if found:
            break
    if not found:
        raise NoFlexFound("no smooth common zero of the cubic and its Hessian")
    found.sort(key=lambda gq: (-round(float(gq[0]), 10), _magnitude_key(gq[1])))
    return _dedupe([q for _, q in found], 10 * pol.cert_eps)


def find_flex(p: MultiPoly) -> list[mpmath.mpc]:
    return find_flexes(p)[0]


# ---------------------------------------------------------------- reduction

def _has_canonical_shape(p: MultiPoly) -> bool:
    eps = numerics.policy().zero_eps
    if any(exp not in CANONICAL_SHAPE for exp in p.terms):
        return False
    return abs(p.coeff(X3) - 1) <= eps and abs(p.coeff(ZT2) + 1) <= eps


def _flex_frame(p: MultiPoly, q) -> list[list]:
    """Rows (point on tangent, point off tangent, flex) of a frame at q."""
    tangent = [evaluate(d, q) for d in _gradient(p)]
    k = max(range(3), key=lambda i: abs(tangent[i]))
    off = [mpmath.mpc(1 if i == k else 0) for i in range(3)]
    best = None
    for j in range(3):
        if j == k:
            continue
        on = [mpmath.mpc(0)] * 3
        on[j] = mpmath.mpc(1)
        on[k] = -tangent[j] / tangent[k]
        det = numerics.det_numeric([on, off, q])
        if best is None or abs(det) > abs(best[0]):
            best = (det, on)
    return [best[1], off, list(q)]


def _reduce_at_flex(p: MultiPoly, q) -> tuple[LinearChange, MultiPoly]:
    pol = numerics.policy()
    frame = _flex_frame(p, q)
    g = substitute_linear(p, frame)
    scale = g.max_abs()
    c = g.coeff(X3)
    e = g.coeff(ZT2)
    if abs(e) <= pol.cert_eps * scale or abs(c) <= pol.cert_eps * scale:
        raise DegenerateTangent("flex frame has a vanishing x^3 or z*t^2 coefficient")
    a = g.coeff(XZT)
    b = g.coeff(Z2T)
    shear = [[1, 0, -a / (2 * e)], [0, 1, -b / (2 * e)], [0, 0, 1]]
    lam = numerics.principal_cbrt(1 / c)
    mu = numerics.principal_sqrt(-1 / e)
    scaling = [[lam, 0, 0], [0, 1, 0], [0, 0, mu]]
    total = numerics.mat_mul(numerics.mat_mul(scaling, shear), frame)
    return LinearChange(total), substitute_linear(p, total)


def weierstrass_reduce(p: MultiPoly) -> CanonicalTernary:
    """Bring an irreducible ternary cubic to canonical shape with a certified transform."""
    pol = numerics.policy()
    if _has_canonical_shape(p):
        transform = LinearChange.identity(3)
        final = p
        flex = [mpmath.mpc(0), mpmath.mpc(0), mpmath.mpc(1)]
    else:
        last_error: Exception | None = None
        for flex in find_flexes(p):
            try:
                transform, final = _reduce_at_flex(p, flex)
                break
            except DegenerateTangent as exc:
                last_error = exc
        else:
            raise NoFlexFound(f"every flex candidate was degenerate ({last_error})")
    lam3, lam7, lam8 = final.coeff(Z3), final.coeff(X2Z), final.coeff(XZ2)
    target = canonical_ternary(lam3, lam7, lam8)
    residual = differences(final, target)
    bound = pol.cert_eps * max(1, abs(lam3), abs(lam7), abs(lam8))
    if residual > bound:
        raise CertificationFailed(
            f"canonical form residual {numerics.to_float_str(residual)} exceeds tolerance", residual
        )
    return CanonicalTernary(lam3, lam7, lam8, transform, label_irreducible(lam3, lam7, lam8),
                            tuple(flex), residual)


# ---------------------------------------------------------------- labels

def _near_zero(value, tol) -> tuple[bool, bool]:
    """(is zero, is within the ambiguity band above tol)."""
    v = abs(value)
    return v <= tol, tol < v <= AMBIGUITY_BAND * tol


def label_irreducible(lam3, lam7, lam8) -> CanonLabel:
    """Match (l3, l7, l8) to one of the five irreducible normal forms.

    After shifting x by -l7*z/3 the curve is x^3 + a*x*z^2 + b*z^3 - t^2*z,
    and (a, b) decide the form. The weights of a and b are 2 and 3 under
    rescaling, so the node and pure-power tests compare a^(1/2) and b^(1/3).
    """
    tol = numerics.policy().cert_eps
    lam3, lam7, lam8 = (mpmath.mpc(v) for v in (lam3, lam7, lam8))
    a = lam8 - lam7**2 / 3
    b = lam3 - lam7 * lam8 / 3 + 2 * lam7**3 / 27
    s = max(abs(a) ** mpmath.mpf(0.5), abs(b) ** (mpmath.mpf(1) / 3))
    # x^3 and z*t^2 are already normalized to 1 and -1, so a and b carry an
    # absolute size; the remaining tests are ratios and scale-free.
    cusp, cusp_amb = _near_zero(max(abs(a), abs(b)), tol)
    if cusp:
        return CanonLabel("I", 4, IRREDUCIBLE_FORMS[4], ambiguous=False)
    node, node_amb = _near_zero((4 * a**3 + 27 * b**2) / s**6, tol)
    a0, a_amb = _near_zero(a / s**2, tol)
    b0, b_amb = _near_zero(b / s**3, tol)
    ambiguous = cusp_amb or node_amb or a_amb or b_amb
    if node:
        return CanonLabel("I", 5, IRREDUCIBLE_FORMS[5], ambiguous=ambiguous)
    if a0:
        return CanonLabel("I", 3, IRREDUCIBLE_FORMS[3], ambiguous=ambiguous)
    if b0:
        return CanonLabel("I", 2, IRREDUCIBLE_FORMS[2], ambiguous=ambiguous)
    # x -> k x, z -> m z with b m^3 = k^3 turns a into alpha = a / b^(2/3);
    # alpha is defined up to a cube root of unity, alpha^3 = a^3 / b^2 is not.
    alpha = a / numerics.principal_cbrt(b) ** 2
    return CanonLabel("I", 1, IRREDUCIBLE_FORMS[1], alpha=alpha, ambiguous=ambiguous)


def _line_points(line) -> tuple[list, list]:
    """Two points spanning the line sum(line[i] * v_i) = 0."""
    k = max(range(3), key=lambda i: abs(line[i]))
    pts = []
    for j in range(3):
        if j == k:
            continue
        v = [mpmath.mpc(0)] * 3
        v[j] = mpmath.mpc(1)
        v[k] = -line[j] / line[k]
        pts.append(v)
    return pts[0], pts[1]


def label_reducible(p: MultiPoly, lines) -> CanonLabel:
    """Match a reducible ternary cubic to one of the six normal forms."""
    tol = numerics.policy().cert_eps
    if not lines:
        raise ValueError("label_reducible needs at least one line")
    if len(lines) >= 3:
        det = numerics.det_numeric(lines[:3])
        concurrent, amb = _near_zero(det, tol)
        idx = 4 if concurrent else 3
        return CanonLabel("II", idx, REDUCIBLE_FORMS[idx], ambiguous=amb)
    if len(lines) == 2:
        return CanonLabel("II", 5, REDUCIBLE_FORMS[5])
    line = lines[0]
    conic, _ = divide_linear(p * (1 / p.max_abs()), line)
    if line_remainder(conic, line) <= tol:
        return CanonLabel("II", 6, REDUCIBLE_FORMS[6])
    u, w = _line_points(line)
    coeffs = restrict_to_line(conic, u, w)
    coeffs += [mpmath.mpc(0)] * (3 - len(coeffs))
    c0, c1, c2 = coeffs[:3]
    disc = c1**2 - 4 * c0 * c2
    scale = max(abs(c0), abs(c1), abs(c2)) ** 2
    tangent, amb = _near_zero(disc / scale, tol)
    idx = 1 if tangent else 2
    return CanonLabel("II", idx, REDUCIBLE_FORMS[idx], ambiguous=amb)


@dataclass(frozen=True)
class SliceAnalysis:
    """Outcome of analysing one ternary cubic: canonical data or its lines."""

    poly: MultiPoly
    lines: list
    label: CanonLabel | None
    canonical: CanonicalTernary | None = None


def analyse(p: MultiPoly) -> SliceAnalysis:
    if p.is_zero():
        return SliceAnalysis(p, [], None)
    lines = find_lines(p)
    if lines:
        return SliceAnalysis(p, lines, label_reducible(p, lines))
    ct = weierstrass_reduce(p)
    return SliceAnalysis(p, [], ct.label, ct)
