"""From a reduced plane section to 6x6 skew matrices whose Pfaffian is the cubic.

Coordinates are row vectors throughout: a change A sends f to f o A with
(f o A)(v) = f(v . A), so applying A first and then B is the change B . A.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace

import mpmath

from . import numerics
from .cubic_io import THETA_MONOMIALS, CubicSurface, from_poly, to_poly
from .errors import CertificationFailed, NotSplit, RotationExhausted, SignIndeterminate
from .multipoly import (
    LinearChange,
    MultiPoly,
    compose,
    differences,
    divide_linear,
    substitute_linear,
)
from .ternary import CanonicalTernary, _line_points, find_lines, slice_y0
from .verifier import Certificate, LinearMatrix, pfaffian_symbolic

# Coefficient names of the canonical quaternary shape, by theta slot.
LAMBDA_SLOTS = (2, 3, 5, 6, 7, 8, 11, 12, 13, 17, 18, 20)
YT2 = (0, 1, 0, 2)
SLICE_INDICES = (0, 2, 3)  # x, z, t inside (x, y, z, t)


def _exp(slot: int) -> tuple[int, int, int, int]:
    return THETA_MONOMIALS[slot - 1]


def canonical_quaternary(lam: dict) -> MultiPoly:
    """x^3 - t^2*z plus sum of lam[k] times the monomial in theta slot k."""
    terms = {_exp(1): 1, _exp(16): -1}
    for k in LAMBDA_SLOTS:
        terms[_exp(k)] = lam.get(k, 0)
    return MultiPoly(4, terms)


@dataclass(frozen=True)
class CanonicalQuaternary:
    lam: dict  # theta slot -> value, for the twelve slots in LAMBDA_SLOTS
    transform: LinearChange
    embed: LinearChange
    beta: mpmath.mpc
    residual: mpmath.mpf = field(default_factory=lambda: mpmath.mpf(0))

    def __getitem__(self, k: int):
        return self.lam[k]

    def form(self) -> MultiPoly:
        return canonical_quaternary(self.lam)


@dataclass(frozen=True)
class D11:
    value: mpmath.mpc
    branch: str  # "plus" or "minus"


@dataclass(frozen=True)
class PfaffianRep:
    matrices: LinearMatrix
    branch: str  # irreducible, rotated, plane_split
    certificate: Certificate | None = None
    pf_sign: int = 1

    @property
    def A(self) -> tuple:
        return self.matrices.mats


def embed_ternary(t3: LinearChange) -> LinearChange:
    """4x4 change acting as t3 on (x, z, t) and fixing y."""
    m = numerics.identity(4)
    for a, i in enumerate(SLICE_INDICES):
        for b, j in enumerate(SLICE_INDICES):
            m[i][j] = t3.matrix[a][b]
    return LinearChange(m)


def shear_matrix(beta) -> LinearChange:
    """z -> z + beta*y."""
    m = numerics.identity(4)
    m[1][2] = mpmath.mpc(beta)
    return LinearChange(m)


def embed_and_shear(c: CubicSurface, ct: CanonicalTernary,
                    pre: LinearChange | None = None) -> CanonicalQuaternary:
    """Lift the section transform to 4 variables and clear the y*t^2 term.

    ``pre`` is an optional change already applied to f (the rotated branch);
    the reported transform then includes it.
    """
    pol = numerics.policy()
    f = to_poly(c)
    embed = embed_ternary(ct.transform)
    g = substitute_linear(f, embed)
    beta = g.coeff(YT2)
    shear = shear_matrix(beta)
    transform = shear @ embed
    h = substitute_linear(g, shear)
    if pre is not None:
        transform = transform @ pre
    lam = {k: h.coeff(_exp(k)) for k in LAMBDA_SLOTS}
    residual = differences(h, canonical_quaternary(lam))
    bound = pol.cert_eps * max([mpmath.mpf(1)] + [abs(v) for v in lam.values()])
    if residual > bound:
        raise CertificationFailed(
            f"canonical quaternary residual {numerics.to_float_str(residual)} exceeds tolerance",
            residual,
        )
    return CanonicalQuaternary(lam, transform, embed, beta, residual)


def compute_d11(lam18, branch: str = "plus") -> D11:
    """Root of d^2 + lam18*d + 1 = 0 with the chosen sign of the square root."""
    if branch not in ("plus", "minus"):
        raise ValueError("branch must be 'plus' or 'minus'")
    lam18 = mpmath.mpc(lam18)
    root = numerics.principal_sqrt(lam18**2 - 4)
    if branch == "minus":
        root = -root
    return D11((-lam18 + root) / 2, branch)


def b_matrices(cq, d) -> tuple:
    """The four constant skew matrices of the canonical representation."""
    L = cq.lam if isinstance(cq, CanonicalQuaternary) else cq
    d = d.value if isinstance(d, D11) else mpmath.mpc(d)
    z = mpmath.mpc(0)

    def get(k):
        return mpmath.mpc(L.get(k, 0))

    L2, L3, L5, L6, L7, L8 = get(2), get(3), get(5), get(6), get(7), get(8)
    L11, L12, L13, L17, L18, L20 = get(11), get(12), get(13), get(17), get(18), get(20)
    b0 = [
        [z, 1, z, z, z, -L7],
        [-1, z, z, z, z, -L5],
        [z, z, z, -1, z, z],
        [z, z, 1, z, z, z],
        [z, z, z, z, z, -1],
        [L7, L5, z, z, 1, z],
    ]
    b1 = [
        [z, z, L11, z, -1, L2 - L17],
        [z, z, L2, z, z, -L6],
        [-L11, -L2, z, z, z, L12],
        [z, z, z, z, z, 1],
        [1, z, z, z, z, z],
        [-L2 + L17, L6, -L12, -1, z, z],
    ]
    b2 = [
        [z, z, z, -1, z, -L8],
        [z, z, z, z, 1, z],
        [z, z, z, z, z, L3],
        [1, z, z, z, z, z],
        [z, -1, z, z, z, z],
        [L8, z, -L3, z, z, z],
    ]
    b3 = [
        [z, z, L20 - d * L6, z, z, L13 + d * L5],
        [z, z, L13, z, z, -L18 - d],
        [-L20 + d * L6, -L13, z, z, d, z],
        [z, z, z, z, z, z],
        [z, z, -d, z, z, z],
        [-L13 - d * L5, L18 + d, z, z, z, z],
    ]
    return b0, b1, b2, b3


def build_M0(cq, d) -> PfaffianRep:
    m = LinearMatrix(b_matrices(cq, d))
    m.check_skew()
    return PfaffianRep(m, "irreducible")


def _swap12() -> list[list]:
    p = numerics.identity(6)
    p[0][0] = p[1][1] = mpmath.mpc(0)
    p[0][1] = p[1][0] = mpmath.mpc(1)
    return p


def normalize_sign(rep: PfaffianRep, target: MultiPoly) -> PfaffianRep:
    """Make Pf(M) = +target, swapping the first two indices if it is -target."""
    pol = numerics.policy()
    pf = pfaffian_symbolic(rep.matrices)
    tol = pol.cert_eps * max(1, target.max_abs())
    if differences(pf, target) <= tol:
        return replace(rep, pf_sign=1)
    if differences(pf, -target) <= tol:
        return replace(rep, matrices=rep.matrices.conjugate(_swap12()), pf_sign=1)
    raise SignIndeterminate(
        "Pfaffian matches neither the target nor its negative "
        f"(residuals {numerics.to_float_str(differences(pf, target))}, "
        f"{numerics.to_float_str(differences(pf, -target))})"
    )


def pull_back(rep: PfaffianRep, transform: LinearChange) -> PfaffianRep:
    """Turn a representation of f o T into one of f by substituting v -> v . T^-1."""
    inv = transform.inverse
    mats = rep.matrices.mats
    n = rep.matrices.size
    new = []
    for j in range(4):
        new.append([
            [mpmath.fsum(inv[j][i] * mats[i][r][s] for i in range(4)) for s in range(n)]
            for r in range(n)
        ])
    return replace(rep, matrices=LinearMatrix(tuple(new)), certificate=None)


# ---------------------------------------------------------------- reducible sections

def _is_irreducible_slice(p: MultiPoly) -> bool:
    return not p.is_zero() and not find_lines(p)


def rotate_until_irreducible(c: CubicSurface, seed: int = 0,
                             attempts: int = 20) -> tuple[CubicSurface, LinearChange]:
    """Random small-integer change R with an irreducible y = 0 section of f o R."""
    rng = random.Random(seed)
    f = to_poly(c)
    for _ in range(attempts):
        m = [[rng.randint(-3, 3) for _ in range(4)] for _ in range(4)]
        if abs(numerics.det_numeric(m)) < 0.5:  # integer matrix: det is 0 or >= 1
            continue
        rot = LinearChange(m)
        g = substitute_linear(f, rot)
        if _is_irreducible_slice(slice_y0(from_poly(g))):
            return from_poly(g), rot
    raise RotationExhausted(f"no irreducible section found in {attempts} random rotations")


def _plane_through(points) -> list | None:
    """Coefficients of the hyperplane through three points of C^4 (3x3 minors)."""
    normal = []
    for k in range(4):
        cols = [i for i in range(4) if i != k]
        minor = numerics.det_numeric([[p[i] for i in cols] for p in points])
        normal.append((-1) ** k * minor)
    if numerics.max_abs(normal) <= numerics.policy().zero_eps:
        return None
    return numerics.projective_normalize(normal)


def _section(f: MultiPoly, frame) -> MultiPoly:
    """f restricted to the plane spanned by the rows of a 3x4 frame."""
    forms = [MultiPoly.linear_form([frame[a][i] for a in range(3)]) for i in range(4)]
    return compose(f, forms)


def _section_line_points(f: MultiPoly, frame) -> list[tuple[list, list]]:
    out = []
    for line in find_lines(_section(f, frame)):
        u, w = _line_points(line)
        lift = [
            [mpmath.fsum(p[a] * frame[a][i] for a in range(3)) for i in range(4)] for p in (u, w)
        ]
        out.append((lift[0], lift[1]))
    return out


def _accept_plane(fn: MultiPoly, ell) -> tuple[MultiPoly, mpmath.mpf] | None:
    q, rem = divide_linear(fn, ell)
    r = rem.max_abs()
    if r <= numerics.policy().cert_eps:
        return q, r
    return None


def split_plane(c: CubicSurface) -> tuple[list, MultiPoly]:
    """A hyperplane l with l | f, normalized so its largest coefficient is 1, and f / l.

    Coordinate hyperplanes are tried first. Otherwise the plane is recovered
    from the lines it cuts on two generic plane sections.
    """
    f = to_poly(c)
    scale = f.max_abs()
    fn = f * (1 / scale)
    candidates = [[mpmath.mpc(1 if i == k else 0) for i in range(4)] for k in (1, 0, 2, 3)]
    rng = random.Random(0x5B117)
    frames = [
        [[mpmath.mpc(rng.uniform(-1, 1), rng.uniform(-1, 1)) for _ in range(4)] for _ in range(3)]
        for _ in range(2)
    ]
    for ell in candidates:
        hit = _accept_plane(fn, ell)
        if hit:
            return ell, hit[0] * scale
    first = _section_line_points(fn, frames[0])
    second = _section_line_points(fn, frames[1])
    best = None
    for p1, p2 in first:
        for p3, p4 in second:
            for extra in (p3, p4):
                ell = _plane_through([p1, p2, extra])
                if ell is None:
                    continue
                hit = _accept_plane(fn, ell)
                if hit and (best is None or hit[1] < best[2]):
                    best = (ell, hit[0], hit[1])
    if best is None:
        raise NotSplit("no hyperplane divides the cubic")
    return best[0], best[1] * scale


def quadric_gram(q: MultiPoly) -> list[list]:
    g = [[mpmath.mpc(0)] * 4 for _ in range(4)]
    for exp, coef in q.terms.items():
        idx = [i for i in range(4) for _ in range(exp[i])]
        if len(idx) != 2:
            raise ValueError("not a quadratic form")
        i, j = idx
        if i == j:
            g[i][i] += coef
        else:
            g[i][j] += coef / 2
            g[j][i] += coef / 2
    return g


def _sum_of_squares(q: MultiPoly) -> list[list]:
    """Linear forms w_k (coefficient vectors) with q = sum w_k^2."""
    pol = numerics.policy()
    g = quadric_gram(q)
    scale = q.max_abs()
    forms = []
    for _ in range(4):
        big = numerics.max_abs(v for row in g for v in row)
        if big <= pol.cert_eps * scale:
            break
        k = max(range(4), key=lambda i: abs(g[i][i]))
        if abs(g[k][k]) >= big / 2:
            s = [1 if i == k else 0 for i in range(4)]
        else:
            # no usable diagonal pivot: use e_i + e_j on the largest off-diagonal entry
            i, j = max(((i, j) for i in range(4) for j in range(i + 1, 4)),
                       key=lambda ij: abs(g[ij[0]][ij[1]]))
            s = [1 if m in (i, j) else 0 for m in range(4)]
        gs = [mpmath.fsum(g[r][m] * s[m] for m in range(4)) for r in range(4)]
        sgs = mpmath.fsum(s[r] * gs[r] for r in range(4))
        root = numerics.principal_sqrt(sgs)
        forms.append([v / root for v in gs])
        g = [[g[r][m] - gs[r] * gs[m] / sgs for m in range(4)] for r in range(4)]
    return forms


def quadric_to_pfaffian_pair(q: MultiPoly) -> tuple[list, list, list, list]:
    """Linear forms (l1, l2, l3, l4) with q = l1*l2 + l3*l4."""
    if q.is_zero():
        raise ValueError("quadric is zero")
    w = _sum_of_squares(q)
    zero = [mpmath.mpc(0)] * 4
    j = mpmath.mpc(0, 1)

    def plus(a, b):
        return [x + j * y for x, y in zip(a, b)]

    def minus(a, b):
        return [x - j * y for x, y in zip(a, b)]

    r = len(w)
    if r == 1:
        pair = (w[0], w[0], zero, zero)
    elif r == 2:
        pair = (plus(w[0], w[1]), minus(w[0], w[1]), zero, zero)
    elif r == 3:
        pair = (plus(w[0], w[1]), minus(w[0], w[1]), w[2], w[2])
    else:
        pair = (plus(w[0], w[1]), minus(w[0], w[1]), plus(w[2], w[3]), minus(w[2], w[3]))
    lf = [MultiPoly.linear_form(v) for v in pair]
    err = differences(lf[0] * lf[1] + lf[2] * lf[3], q)
    if err > numerics.policy().cert_eps * max(1, q.max_abs()):
        raise CertificationFailed(
            f"quadric pairing residual {numerics.to_float_str(err)} exceeds tolerance", err
        )
    return tuple([mpmath.mpc(x) for x in v] for v in pair)


def block_representation(ell, l1, l2, l3, l4) -> PfaffianRep:
    """Block diagonal [[0, l], [-l, 0]] (+) 4x4 block with Pfaffian l1*l2 + l3*l4."""
    mats = [[[mpmath.mpc(0)] * 6 for _ in range(6)] for _ in range(4)]

    def put(i, j, form):
        for k in range(4):
            mats[k][i][j] = mpmath.mpc(form[k])
            mats[k][j][i] = -mpmath.mpc(form[k])

    put(0, 1, ell)
    put(2, 3, l1)
    put(4, 5, l2)
    put(2, 5, l3)
    put(3, 4, l4)
    m = LinearMatrix(tuple(mats))
    m.check_skew()
    return PfaffianRep(m, "plane_split")
