from __future__ import annotations

import warnings

import mpmath
import pytest

from conftest import rand_matrix
from pfaffcubic import numerics
from pfaffcubic.cubic_io import parse_cubic, parse_expression
from pfaffcubic.errors import NoFlexFound
from pfaffcubic.multipoly import (
    LinearChange,
    MultiPoly,
    differences,
    evaluate,
    hessian3,
    substitute_linear,
)
from pfaffcubic.ternary import (
    IRREDUCIBLE_FORMS,
    REDUCIBLE_FORMS,
    analyse,
    canonical_ternary,
    find_flex,
    find_flexes,
    find_lines,
    label_irreducible,
    line_remainder,
    slice_y0,
    weierstrass_reduce,
)


def tern(expr: str) -> MultiPoly:
    p = parse_expression(expr)
    return MultiPoly(3, {(e[0], e[2], e[3]): c for e, c in p.terms.items()})


def as_set(lines):
    return {tuple(complex(v) for v in ln) for ln in lines}


def test_slice_drops_y_terms():
    assert differences(slice_y0(parse_cubic("x^3+y^3")), tern("x^3")) == 0


def test_slice_of_y_multiple_is_zero():
    assert slice_y0(parse_cubic("y*(x^2+t*z)")).is_zero()


def test_slice_weierstrass():
    assert differences(slice_y0(parse_cubic("x^3-t^2*z")), tern("x^3-t^2*z")) == 0


def test_lines_of_xtz():
    # coefficients in (x, z, t)
    assert as_set(find_lines(tern("x*t*z"))) == {(1, 0, 0), (0, 1, 0), (0, 0, 1)}


def test_single_line_of_line_times_conic():
    lines = find_lines(tern("z*(x^2+t*z)"))
    assert as_set(lines) == {(0, 1, 0)}


def test_irreducible_has_no_lines():
    assert find_lines(tern("x^3+z^3-t^2*z")) == []


@pytest.mark.parametrize("form, count", [
    ("z*(x^2+t*z)", 1), ("z*(x^2+t^2+z^2)", 1), ("x*t*z", 3),
    ("x*t*(x+t)", 3), ("x^2*t", 2), ("x^3", 1),
])
def test_line_counts(form, count):
    lines = find_lines(tern(form))
    assert len(lines) == count
    for ln in lines:
        assert line_remainder(tern(form), ln) <= numerics.policy().cert_eps


def test_lines_after_generic_change(rng):
    p = tern("x*t*(x+t)")
    a = LinearChange(rand_matrix(rng, 3))
    q = substitute_linear(p, a)
    lines = find_lines(q)
    assert len(lines) == 3
    for ln in lines:
        assert line_remainder(q, ln) <= 1e-38


def test_near_threshold_line_warns():
    eps = numerics.policy().cert_eps
    p = tern("x*t*z") + tern("z^3") * (eps * 30)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        lines = find_lines(p)
    assert lines == [] or all(line_remainder(p, ln) <= eps for ln in lines)
    assert any("threshold" in str(w.message) for w in caught)


def _check_flex(p, q):
    pn = p * (1 / p.max_abs())
    h = hessian3(pn)
    h = h * (1 / h.max_abs())
    eps = numerics.policy().cert_eps
    assert abs(evaluate(pn, q)) <= eps
    assert abs(evaluate(h, q)) <= eps
    assert max(abs(evaluate(pn.diff(i), q)) for i in range(3)) > 1e-10


def test_flex_of_fermat():
    p = tern("x^3+z^3+t^3")
    q = find_flex(p)
    _check_flex(p, q)
    assert len(find_flexes(p)) == 9


def test_flex_of_cusp_rejects_singular_point():
    p = tern("x^3-t^2*z")
    flexes = find_flexes(p)
    assert len(flexes) == 1
    assert as_set(flexes) == {(0, 0, 1)}
    _check_flex(p, flexes[0])


def test_flex_residuals():
    p = tern("x^3+x*z^2-t^2*z")
    _check_flex(p, find_flex(p))


def test_no_flex_for_triple_line():
    with pytest.raises(NoFlexFound):
        find_flexes(tern("x^3"))


def test_reduce_canonical_input_is_identity():
    ct = weierstrass_reduce(tern("x^3+z^3-t^2*z"))
    assert (ct.lam3, ct.lam7, ct.lam8) == (1, 0, 0)
    assert ct.transform.matrix == LinearChange.identity(3).matrix
    assert ct.label.name == "I3"


def test_reduce_cusp():
    ct = weierstrass_reduce(tern("x^3-t^2*z"))
    assert (ct.lam3, ct.lam7, ct.lam8) == (0, 0, 0)
    assert ct.label.name == "I4"


def test_reduce_round_trip_under_gl3(rng):
    p = tern("x^3+z^3-t^2*z")
    for _ in range(3):
        a = LinearChange(rand_matrix(rng, 3))
        q = substitute_linear(p, a)
        ct = weierstrass_reduce(q)
        # the invariant: q o transform equals the reported canonical form
        got = substitute_linear(q, ct.transform)
        assert differences(got, ct.form()) <= 1e-38 * max(1, abs(ct.lam3))
        assert ct.label.name == "I3"


def test_reduce_generic_cubic_invariant():
    p = tern("3*x^3-2*x^2*z+5*x*z*t+7*t^3-z^3+x*t^2")
    ct = weierstrass_reduce(p)
    got = substitute_linear(p, ct.transform)
    assert differences(got, canonical_ternary(ct.lam3, ct.lam7, ct.lam8)) <= 1e-38 * 10
    assert ct.label.name == "I1"


def test_labels_from_lambdas():
    assert label_irreducible(1, 0, 0).name == "I3"
    assert label_irreducible(0, 0, 1).name == "I2"
    assert label_irreducible(0, 0, 0).name == "I4"
    assert label_irreducible(0, 1, 0).name == "I5"
    lab = label_irreducible(1, 0, 2)
    assert lab.name == "I1"
    assert abs(lab.alpha**3 - 8) < 1e-60


def test_nodal_alpha_is_minus_27_over_4():
    # x^3 + alpha*x*z^2 + z^3 - t^2*z is singular exactly when alpha^3 = -27/4
    alpha = -numerics.principal_cbrt(mpmath.mpf(27) / 4)
    assert label_irreducible(1, 0, alpha).name == "I5"
    alpha_pos = numerics.principal_cbrt(mpmath.mpf(27) / 4)
    assert label_irreducible(1, 0, alpha_pos).name == "I1"


def test_label_ambiguity_band():
    eps = numerics.policy().cert_eps
    lab = label_irreducible(1, 0, eps * 10)
    assert lab.name == "I1" and lab.ambiguous


def test_x2z_shape_is_nodal():
    # x^3 + x^2*z - t^2*z has a node at [0:1:0]
    assert label_irreducible(0, 1, 0).name == "I5"


@pytest.mark.parametrize("idx", sorted(REDUCIBLE_FORMS))
def test_reducible_labels(idx):
    a = analyse(tern(REDUCIBLE_FORMS[idx]))
    assert a.label.family == "II" and a.label.index == idx


@pytest.mark.parametrize("idx", sorted(IRREDUCIBLE_FORMS))
def test_irreducible_labels(idx):
    a = analyse(tern(IRREDUCIBLE_FORMS[idx].replace("a*", "1*")))
    assert a.label.family == "I" and a.label.index == idx
