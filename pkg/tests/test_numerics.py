from __future__ import annotations

import cmath

import mpmath
import pytest
from mpmath import mp

from conftest import rand_complex
from pfaffcubic import numerics
from pfaffcubic.errors import LeadingZero, NumericalZeroDivision, SingularTransform
from pfaffcubic.numerics import (
    TolerancePolicy,
    cluster_roots,
    principal_cbrt,
    principal_sqrt,
    root_candidates,
    roots_univariate,
    working_precision,
)


def test_policy_defaults_at_256_bits():
    pol = numerics.policy()
    assert pol.precision_bits == 256
    assert pol.cert_eps == mpmath.ldexp(1, -128)
    assert pol.zero_eps == mpmath.ldexp(1, -224)
    assert pol.hard_zero == mpmath.ldexp(1, -240)


def test_policy_rejects_tolerance_below_floor():
    with pytest.raises(ValueError):
        TolerancePolicy.for_precision(256, cert_eps=mpmath.ldexp(1, -250))


def test_working_precision_restores_previous():
    before = mp.prec
    with working_precision(512):
        assert mp.prec == 512
        assert numerics.policy().cert_eps == mpmath.ldexp(1, -256)
    assert mp.prec == before


def test_sqrt_of_four():
    assert principal_sqrt(4) == 2


def test_sqrt_of_negative_four_is_2i():
    assert principal_sqrt(-4) == mpmath.mpc(0, 2)


def test_sqrt_of_minus_seven_quarters():
    r = principal_sqrt(mpmath.mpf(9) / 4 - 4)
    assert abs(r * r + mpmath.mpf(7) / 4) < 1e-70
    assert r.real == 0 and r.imag > 0
    assert abs(r.imag - mpmath.sqrt(7) / 2) < 1e-70


def test_sqrt_branch_and_accuracy_random(rng):
    bound = mpmath.ldexp(1, -256 + 20)
    for _ in range(1000):
        v = rand_complex(rng, 10)
        r = principal_sqrt(v)
        assert abs(r * r - v) <= bound * abs(v)
        assert r.real > 0 or (r.real == 0 and r.imag >= 0)


def test_sqrt_negative_real_axis_lower_side():
    # -1 - 0i still maps to +i
    r = principal_sqrt(mpmath.mpc(-1, mpmath.mpf("-0.0")))
    assert r == mpmath.mpc(0, 1)


def test_cbrt_cubes_back(rng):
    for _ in range(50):
        v = rand_complex(rng, 5)
        assert abs(principal_cbrt(v) ** 3 - v) < 1e-70


def test_div_refuses_hard_zero():
    with pytest.raises(NumericalZeroDivision):
        numerics.div(1, mpmath.ldexp(1, -250))
    assert numerics.div(1, 4) == mpmath.mpf(0.25)


def _sorted(roots):
    return sorted(roots, key=lambda z: (float(z.real), float(z.imag)))


def test_roots_of_z2_minus_1():
    r = _sorted(roots_univariate([-1, 0, 1]))
    assert abs(r[0] + 1) < 1e-70 and abs(r[1] - 1) < 1e-70


def test_roots_of_unity():
    r = roots_univariate([-1, 0, 0, 1])
    for k in range(3):
        w = mpmath.exp(2j * mpmath.pi * k / 3)
        assert min(abs(z - w) for z in r) < 1e-70


def test_roots_residual_z3_minus_2z_plus_5():
    for z in roots_univariate([5, -2, 0, 1]):
        assert abs(z**3 - 2 * z + 5) <= 1e-70


def test_roots_agree_with_mpmath_polyroots(rng):
    coeffs = [rand_complex(rng, 10) for _ in range(8)]
    ours = roots_univariate(coeffs)
    ref = mpmath.polyroots(list(reversed(coeffs)), maxsteps=200, extraprec=256)
    for z in ref:
        assert min(abs(z - w) for w in ours) < 1e-60


def test_roots_reconstruct_coefficients(rng):
    bound = mpmath.ldexp(1, -256 + 40)
    for n in range(1, 10):
        coeffs = [rand_complex(rng, 10) for _ in range(n + 1)]
        roots = roots_univariate(coeffs)
        prod = [mpmath.mpc(1)]
        for z in roots:
            nxt = [mpmath.mpc(0)] * (len(prod) + 1)
            for k, c in enumerate(prod):
                nxt[k] -= z * c
                nxt[k + 1] += c
            prod = nxt
        lead = coeffs[-1]
        scale = max(abs(c) for c in coeffs)
        err = max(abs(lead * p - c) for p, c in zip(prod, coeffs))
        assert err <= bound * scale * 10


def test_leading_zero_is_an_error():
    with pytest.raises(LeadingZero):
        roots_univariate([1, 1, 0])


def test_multiple_root_cluster_and_polish():
    coeffs = [-1, 3, -3, 1]  # (z - 1)^3
    clusters = cluster_roots(roots_univariate(coeffs))
    assert len(clusters) == 1 and clusters[0][1] == 3
    cands = root_candidates(coeffs, include_members=False)
    assert len(cands) == 1
    assert abs(cands[0] - 1) < 1e-70


def test_python_complex_oracle_for_quadratic():
    # independent double-precision oracle
    a, b, c = 2 + 1j, -3 + 0.5j, 1 - 2j
    disc = cmath.sqrt(b * b - 4 * a * c)
    ref = [(-b + disc) / (2 * a), (-b - disc) / (2 * a)]
    ours = roots_univariate([c, b, a])
    for z in ref:
        assert min(abs(complex(w) - z) for w in ours) < 1e-12


def test_mat_inv_and_singular(rng):
    from conftest import rand_matrix

    a = rand_matrix(rng, 4)
    inv = numerics.mat_inv(a)
    prod = numerics.mat_mul(a, inv)
    assert numerics.max_abs(prod[i][j] - (i == j) for i in range(4) for j in range(4)) < 1e-70
    with pytest.raises(SingularTransform):
        numerics.mat_inv([[1, 2], [2, 4]])


def test_det_numeric_matches_mpmath(rng):
    from conftest import rand_matrix

    a = rand_matrix(rng, 6)
    assert abs(numerics.det_numeric(a) - mpmath.det(mpmath.matrix(a))) < 1e-65


def test_projective_normalize_and_snap():
    v = numerics.projective_normalize([mpmath.mpc(2), mpmath.mpc(-4), mpmath.mpc(1e-70)])
    assert v[1] == 1 and v[0] == -0.5 and v[2] == 0
