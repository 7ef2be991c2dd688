import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rgnf import expr as ex
from rgnf import polyvec as pv
from rgnf.polyvec import DimensionError, GaussianRational, PolyVF

from conftest import G, I, as_float_field, field_tuples, fields, fx, x


# -- GaussianRational ------------------------------------------------------

def test_gaussian_rational_lowest_terms():
    a = GaussianRational(pv.Q(2, 4), pv.Q(-6, -8))
    assert a.re == pv.Q(1, 2) and a.im == pv.Q(3, 4)
    assert a.re.denominator > 0 and a.im.denominator > 0


@given(st.fractions(max_denominator=50), st.fractions(max_denominator=50),
       st.fractions(max_denominator=50), st.fractions(max_denominator=50))
def test_gaussian_rational_field_ops_match_fraction_arithmetic(a, b, c, d):
    u, v = GaussianRational(a, b), GaussianRational(c, d)
    prod = u * v
    assert Fraction(str(prod.re)) == a * c - b * d
    assert Fraction(str(prod.im)) == a * d + b * c
    if v:
        q = u / v
        assert q * v == u
    for w in (u + v, u - v, prod):
        assert w.re.denominator > 0 and w.im.denominator > 0


def test_gaussian_rational_equality_is_exact():
    assert G(pv.Q(1, 3)) != G(0.3333333333333333)
    assert G(1, 1) == GaussianRational(pv.Q(2, 2), pv.Q(3, 3))
    assert I * I == G(-1)


# -- canonical form and construction --------------------------------------

def test_zero_coefficients_are_dropped():
    f = PolyVF(2, {(0, (1, 0)): 1, (1, (0, 1)): 0})
    assert len(f) == 1
    g = f + (-f)
    assert g.is_zero and len(g) == 0


def test_exponent_length_checked():
    with pytest.raises(DimensionError):
        PolyVF(2, {(0, (1,)): 1})
    with pytest.raises(DimensionError):
        PolyVF(2, {(2, (1, 0)): 1})


def test_constant_free_flag_rejects_constants():
    with pytest.raises(ValueError):
        PolyVF(2, {(0, (0, 0)): 1}, constant_free=True)


@given(fields())
def test_serialization_round_trip(f):
    assert PolyVF.from_json(f.to_json()) == f
    assert PolyVF.from_dict(json.loads(json.dumps(f.to_dict()))) == f
    assert all(c for c in f.terms.values())


def test_serialization_format():
    f = PolyVF(2, {(0, (0, 1)): G(0, pv.Q(1, 2)), (1, (1, 0)): G(pv.Q(-3, 4))})
    d = f.to_dict()
    assert d["dim"] == 2
    # JSON components are 1-based; exponents sorted lexicographically within a degree
    assert d["terms"] == [
        {"comp": 1, "exp": [0, 1], "re": "0/1", "im": "1/2"},
        {"comp": 2, "exp": [1, 0], "re": "-3/4", "im": "0/1"},
    ]
    for t in d["terms"]:
        assert "/" in t["re"] and "/" in t["im"]
        assert "." not in t["re"] + t["im"]


def test_terms_sorted_graded_lex():
    f = PolyVF(2, {(1, (2, 0)): 1, (0, (0, 1)): 1, (0, (1, 0)): 1, (0, (0, 2)): 1})
    keys = [(t["exp"], t["comp"]) for t in f.to_dict()["terms"]]
    degs = [sum(e) for e, _ in keys]
    assert degs == sorted(degs)


# -- add ------------------------------------------------------------------

def test_add_examples():
    e1 = PolyVF.monomial(2, 0, (1, 0))
    assert pv.add(e1, PolyVF.zero(2)) == e1
    assert pv.add(e1, -e1).is_zero
    assert pv.add(e1, e1) == PolyVF.monomial(2, 0, (1, 0), 2)


def test_add_dimension_mismatch():
    with pytest.raises(DimensionError):
        pv.add(PolyVF.identity(2), PolyVF.identity(3))


# -- jacobian_apply -------------------------------------------------------

def test_jacobian_apply_single_variable():
    f = PolyVF.monomial(2, 0, (2, 0))
    g = PolyVF.monomial(2, 0, (1, 0))
    assert pv.jacobian_apply(f, g) == PolyVF.monomial(2, 0, (2, 0), 2)


def test_jacobian_apply_linear_field(rng):
    B = [[G(1), G(2, -1)], [G(0, 3), G(pv.Q(-1, 2))]]
    f = PolyVF.linear(B)
    g = fx.random_field(rng, 2, 3, 5)
    expect = PolyVF(2, {})
    for i in range(2):
        for j in range(2):
            for q, c in g.component(j).items():
                expect = expect + PolyVF.monomial(2, i, q, B[i][j] * c)
    assert pv.jacobian_apply(f, g) == expect


def test_jacobian_apply_hand_expansion(rng):
    f = PolyVF.monomial(2, 0, (1, 1))
    g = PolyVF(2, {(0, (0, 1)): 1, (1, (1, 0)): 1})
    got = pv.jacobian_apply(f, g)
    assert got == PolyVF(2, {(0, (0, 2)): 1, (0, (2, 0)): 1})
    # both sides at random points
    for _ in range(20):
        p = rng.normal(size=2) + 1j * rng.normal(size=2)
        assert np.allclose(got(p), [p[1] ** 2 + p[0] ** 2, 0], atol=1e-14)


def test_jacobian_apply_degree_bound(rng):
    f = fx.random_field(rng, 3, 4)
    g = fx.random_field(rng, 3, 3)
    assert pv.jacobian_apply(f, g).degree <= f.degree + g.degree - 1


def _numeric_jacobian_apply(f, g, p, h=1e-6):
    F, Gf = as_float_field(f), as_float_field(g)
    v = Gf(p)
    return (F(p + h * v) - F(p - h * v)) / (2 * h)


@given(field_tuples(2))
def test_jacobian_apply_matches_float_evaluation(fg):
    f, g = fg
    got = as_float_field(pv.jacobian_apply(f, g))
    rng = np.random.default_rng(1)
    # central differences on the float evaluator are the independent side
    for _ in range(20):
        p = 0.3 * (rng.normal(size=f.dim) + 1j * rng.normal(size=f.dim))
        ref = _numeric_jacobian_apply(f, g, p)
        assert np.allclose(got(p), ref, atol=1e-7, rtol=1e-7)


@given(field_tuples(3))
def test_jacobian_apply_bilinear(fgh):
    f, g, h = fgh
    c = G(pv.Q(2, 3), -1)
    assert pv.jacobian_apply(f + g, h) == pv.jacobian_apply(f, h) + pv.jacobian_apply(g, h)
    assert pv.jacobian_apply(f, g + h) == pv.jacobian_apply(f, g) + pv.jacobian_apply(f, h)
    assert pv.jacobian_apply(pv.scale(f, c), g) == pv.scale(pv.jacobian_apply(f, g), c)


# -- lie_bracket ----------------------------------------------------------

@given(field_tuples(2, max_degree=4))
def test_lie_bracket_antisymmetry(fg):
    f, g = fg
    assert pv.lie_bracket(f, f).is_zero
    assert pv.lie_bracket(f, g) == -pv.lie_bracket(g, f)


@given(field_tuples(3))
def test_jacobi_identity(fgh):
    f, g, h = fgh
    br = pv.lie_bracket
    total = br(f, br(g, h)) + br(g, br(h, f)) + br(h, br(f, g))
    assert total.is_zero


def test_lie_bracket_definition():
    f = PolyVF.monomial(2, 0, (2, 0))
    g = PolyVF.monomial(2, 1, (1, 0))
    assert pv.lie_bracket(f, g) == pv.jacobian_apply(f, g) - pv.jacobian_apply(g, f)


# -- substitute -----------------------------------------------------------

def test_substitute_requires_order():
    with pytest.raises(TypeError):
        pv.substitute(PolyVF.identity(2), [PolyVF.identity(2)])


def test_substitute_dimension_mismatch():
    with pytest.raises(DimensionError):
        pv.substitute(PolyVF.identity(2), [PolyVF.identity(3)], 1)


@given(field_tuples(3))
def test_substitute_first_and_second_order(fs):
    g, x1, x2 = fs
    x0 = PolyVF.identity(g.dim)
    out = pv.substitute(g, [x0, x1, x2], 2)
    assert out[0] == g
    assert out[1] == pv.jacobian_apply(g, x1)
    half = G(pv.Q(1, 2))
    assert out[2] == pv.scale(pv.second_derivative_apply(g, x1, x1), half) + pv.jacobian_apply(g, x2)


@given(field_tuples(2))
def test_substitute_single_entry_is_composition(fs):
    f, s = fs
    out = pv.substitute(f, [s], 3)
    assert all(c.is_zero for c in out[1:])
    F, S, C = as_float_field(f), as_float_field(s), as_float_field(out[0])
    p = np.full(f.dim, 0.3 + 0.2j)
    assert np.allclose(C(p), F(S(p)), atol=1e-12)


@given(fields(max_degree=3))
def test_substitute_identity_series_grades_f(f):
    out = pv.substitute(f, [PolyVF.identity(f.dim)], 2)
    assert out[0] == f and out[1].is_zero and out[2].is_zero


def test_second_derivative_apply_is_symmetric(rng):
    f, u, v = (fx.random_field(rng, 2, 3, 5) for _ in range(3))
    assert pv.second_derivative_apply(f, u, v) == pv.second_derivative_apply(f, v, u)


# -- truncate -------------------------------------------------------------

def test_truncate_examples():
    f = PolyVF(1, {(0, (1,)): 1, (0, (3,)): 1})
    assert pv.truncate(f, 1) == PolyVF.monomial(1, 0, (1,))
    assert pv.truncate(f, f.degree) == f


def test_truncate_taylor_of_sine():
    s = ex.taylor(ex.parse("sin(x1)"), 7)
    assert pv.truncate(s, 3) == PolyVF(1, {(0, (1,)): 1, (0, (3,)): G(pv.Q(-1, 6))})


# -- evaluation and rendering ---------------------------------------------

@given(fields())
def test_packed_evaluation_matches_reference(f):
    rng = np.random.default_rng(2)
    P = rng.normal(size=(f.dim, 7)) + 1j * rng.normal(size=(f.dim, 7))
    ref = np.stack([as_float_field(f)(P[:, k]) for k in range(7)], axis=1)
    assert np.allclose(f(P), ref, atol=1e-12)
    assert np.allclose(f(P[:, 0]), ref[:, 0], atol=1e-12)


def test_text_and_latex_rendering():
    f = PolyVF(2, {(0, (0, 1)): G(0, pv.Q(1, 2)), (0, (3, 0)): G(0, pv.Q(1, 12))})
    assert "z2" in pv.to_text(f, "z")
    tex = pv.to_latex(f, "y")
    assert r"\frac{1}{2} i\, y_{2}" in tex and "y_{1}^{3}" in tex
    assert pv.to_text(f, "z") == "[1/2*i*z2 + 1/12*i*z1^3] e1"


def test_monomial_indexing_helper():
    assert x(3, 1) == (0, 1, 0)
