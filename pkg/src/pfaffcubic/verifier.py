"""Independent certification of a matrix of linear forms against a cubic.

The checks here share nothing with the construction code beyond the
polynomial type: Pfaffian and determinant are expanded symbolically,
compared coefficientwise with f and f^2, and cross-checked numerically
at random points.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

import mpmath

from . import numerics
from .cubic_io import CubicSurface, to_poly
from .errors import NotSkew
from .multipoly import MultiPoly, differences, evaluate, poly_det

NVARS = 4


@dataclass(frozen=True)
class LinearMatrix:
    """M(x, y, z, t) = x*A0 + y*A1 + z*A2 + t*A3 with constant square A_k."""

    mats: tuple

    def __post_init__(self):
        if len(self.mats) != NVARS:
            raise ValueError("need four coefficient matrices")
        mats = tuple(tuple(tuple(mpmath.mpc(x) for x in row) for row in m) for m in self.mats)
        n = len(mats[0])
        for m in mats:
            if len(m) != n or any(len(row) != n for row in m):
                raise ValueError("coefficient matrices must be square and of equal size")
        object.__setattr__(self, "mats", mats)

    @property
    def size(self) -> int:
        return len(self.mats[0])

    def entry(self, i: int, j: int) -> MultiPoly:
        return MultiPoly.linear_form([m[i][j] for m in self.mats])

    def poly_matrix(self) -> list[list[MultiPoly]]:
        return [[self.entry(i, j) for j in range(self.size)] for i in range(self.size)]

    def at(self, point) -> list[list]:
        n = self.size
        return [
            [mpmath.fsum(point[k] * self.mats[k][i][j] for k in range(NVARS)) for j in range(n)]
            for i in range(n)
        ]

    def skew_defect(self) -> mpmath.mpf:
        n = self.size
        return numerics.max_abs(
            m[i][j] + m[j][i] for m in self.mats for i in range(n) for j in range(i, n)
        )

    def check_skew(self):
        if self.skew_defect() != 0:
            raise NotSkew(
                f"matrices are not skew-symmetric (defect {numerics.to_float_str(self.skew_defect())})"
            )

    def conjugate(self, perm_matrix) -> "LinearMatrix":
        """P M P^T for a constant matrix P."""
        pt = numerics.transpose(perm_matrix)
        return LinearMatrix(
            tuple(numerics.mat_mul(numerics.mat_mul(perm_matrix, m), pt) for m in self.mats)
        )

    def __neg__(self) -> "LinearMatrix":
        return LinearMatrix(tuple(tuple(tuple(-x for x in row) for row in m) for m in self.mats))


def pfaffian_symbolic(m: LinearMatrix) -> MultiPoly:
    """Pfaffian by first-row expansion, Pf = sum_j (-1)^j m_1j Pf(M minus rows/cols 1, j)."""
    m.check_skew()
    n = m.size
    if n % 2:
        return MultiPoly.zero(NVARS)
    entries = m.poly_matrix()
    memo: dict[tuple, MultiPoly] = {}

    def pf(idx: tuple) -> MultiPoly:
        if not idx:
            return MultiPoly.constant(1, NVARS)
        if idx in memo:
            return memo[idx]
        first = idx[0]
        total = MultiPoly.zero(NVARS)
        for pos in range(1, len(idx)):
            e = entries[first][idx[pos]]
            if e.is_zero():
                continue
            rest = idx[1:pos] + idx[pos + 1:]
            term = e * pf(rest)
            # 1-based column index pos+1 of the current submatrix
            total = total + term if pos % 2 == 1 else total - term
        memo[idx] = total
        return total

    return pf(tuple(range(n)))


def det_symbolic(m: LinearMatrix) -> MultiPoly:
    return poly_det(m.poly_matrix(), NVARS)


@dataclass(frozen=True)
class Certificate:
    pf_residual: mpmath.mpf
    det_residual: mpmath.mpf
    sample_residual: mpmath.mpf
    consistency_residual: mpmath.mpf
    scale: mpmath.mpf
    cert_eps: mpmath.mpf
    passed: bool

    @property
    def max_coeff_residual(self) -> mpmath.mpf:
        return max(self.pf_residual, self.det_residual)

    def to_json(self) -> dict:
        return {
            "max_coeff_residual": float(self.max_coeff_residual),
            "pf_residual": float(self.pf_residual),
            "det_residual": float(self.det_residual),
            "sample_residual": float(self.sample_residual),
            "consistency_residual": float(self.consistency_residual),
            "scale": float(self.scale),
            "cert_eps": float(self.cert_eps),
            "pass": self.passed,
            "pf_sign": 1,
        }


def _sample_points(n: int, seed: int) -> list[list[mpmath.mpc]]:
    rng = random.Random(seed)
    pts = []
    for _ in range(n):
        pt = []
        for _ in range(NVARS):
            r = rng.random()
            theta = rng.uniform(0, 2 * mpmath.pi)
            pt.append(mpmath.mpc(r * mpmath.cos(theta), r * mpmath.sin(theta)))
        pts.append(pt)
    return pts


def certify(m: LinearMatrix, f, n_samples: int = 16, seed: int = 0) -> Certificate:
    """Residual bundle for Pf(M) = f and det(M) = f^2.

    Passes when the Pfaffian residual is at most cert_eps*S and the
    determinant and sampled residuals at most cert_eps*S^2, where S is the
    largest coefficient of f. Never raises for a mismatch.
    """
    fpoly = to_poly(f) if isinstance(f, CubicSurface) else f
    pol = numerics.policy()
    scale = fpoly.max_abs()
    fsq = fpoly * fpoly
    pf = pfaffian_symbolic(m)
    det = det_symbolic(m)
    pf_res = differences(pf, fpoly)
    det_res = differences(det, fsq)
    consistency = differences(det, pf * pf)
    sample_res = mpmath.mpf(0)
    for pt in _sample_points(n_samples, seed):
        d = numerics.det_numeric(m.at(pt))
        fv = evaluate(fpoly, pt)
        sample_res = max(sample_res, abs(d - fv * fv))
    ok = (
        pf_res <= pol.cert_eps * scale
        and det_res <= pol.cert_eps * scale**2
        and sample_res <= pol.cert_eps * scale**2
        and consistency <= pol.cert_eps * max(scale, pf.max_abs()) ** 2
    )
    return Certificate(pf_res, det_res, sample_res, consistency, scale, pol.cert_eps, bool(ok))
