import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rgnf import expr as ex
from rgnf import polyvec as pv
from rgnf.polyvec import DimensionError, PolyVF

from conftest import G, fields, fx


# -- parse ----------------------------------------------------------------

def test_parse_sine_of_sum():
    node = ex.parse_expr("sin(x1 + x2)", dim=2)
    assert isinstance(node, ex.Func) and node.name == "sin"
    assert isinstance(node.arg, ex.BinOp) and node.arg.op == "+"


def test_parse_parameterized_field():
    vf = ex.parse("x2 + 2*eps*sin(x1); -x1", params={"eps": 0.1})
    assert any(isinstance(n, ex.Param) for n in ex.walk(vf.components[0]))
    val = ex.evaluate(vf, np.array([0.3, 0.5]))
    assert val[0] == pytest.approx(0.5 + 0.2 * math.sin(0.3))
    val = ex.evaluate(vf, np.array([0.3, 0.5]), {"eps": 0.0})
    assert val[0] == pytest.approx(0.5)


@pytest.mark.parametrize("src, col", [("x1 +", 5), ("sin x1", 5), ("x1 ** 2", 5), ("(x1", 4), ("2 x1", 3)])
def test_malformed_input_reports_position(src, col):
    with pytest.raises(SyntaxError) as err:
        ex.parse(src, dim=1)
    assert err.value.lineno == 1
    assert err.value.offset == col


def test_error_line_number_in_multiline_source():
    with pytest.raises(SyntaxError) as err:
        ex.parse("x1\nx2 * (x1 +)", dim=2)
    assert err.value.lineno == 2


def test_unknown_identifier_rejected():
    with pytest.raises(SyntaxError, match="unknown"):
        ex.parse("x1 + alpha", dim=1)
    with pytest.raises(SyntaxError):
        ex.parse("tan(x1)", dim=1)


def test_variable_index_beyond_dimension():
    with pytest.raises(DimensionError):
        ex.parse("x3", dim=2)
    with pytest.raises(DimensionError):
        ex.VectorFieldDef(2, (ex.parse_expr("x1"),))


def test_rational_literals_and_power():
    vf = ex.parse("1/3*x1^3 - 2/5", dim=1)
    assert ex.taylor(vf, 3) == PolyVF(1, {(0, (3,)): G(pv.Q(1, 3)), (0, (0,)): G(pv.Q(-2, 5))})


def test_imaginary_unit():
    vf = ex.parse("I*x1", dim=1)
    assert ex.evaluate(vf, np.array([2.0]))[0] == 2j


def test_fixed_point_flag():
    ex.parse("sin(x1)", fixed_point=True)
    with pytest.raises(ValueError):
        ex.parse("cos(x1)", fixed_point=True)


def test_comments_and_separators():
    vf = ex.parse("x2  # first\n-x1; ")
    assert vf.dim == 2


# -- evaluation -----------------------------------------------------------

def test_eval_examples():
    assert ex.evaluate(fx.sine_expr(), np.zeros(2))[0] == 0
    spec = ex.MollifierSpec()
    assert spec.raw(1.5) == -1.5
    assert ex.MollifierSpec(delta=0.1)(1.5) == -1.5


def test_complex_and_batched_evaluation():
    vf = ex.parse("sin(x1 + x2); exp(x1) * cos(x2)")
    P = np.array([[0.1 + 0.2j, -0.3j, 1.0], [0.4, 0.2 - 0.1j, -1.0]])
    out = ex.evaluate(vf, P)
    assert out.shape == (2, 3)
    assert np.allclose(out[0], np.sin(P[0] + P[1]))
    assert np.allclose(out[1], np.exp(P[0]) * np.cos(P[1]))


def test_division():
    vf = ex.parse("x1 / (1 + x2); x2")
    assert ex.evaluate(vf, np.array([1.0, 1.0]))[0] == pytest.approx(0.5)


# -- mollified piecewise --------------------------------------------------

@given(st.floats(-6, 6, allow_nan=False))
def test_mollifier_is_odd(x):
    g = ex.MollifierSpec(delta=0.05)
    assert g(-x) == -g(x)


@given(st.floats(0, 6, allow_nan=False))
def test_mollifier_equals_raw_outside_zones(x):
    g = ex.MollifierSpec(delta=0.05)
    b = round(x)
    if b == 0 or abs(x - b) >= 0.05:
        assert g(x) == pytest.approx(float(g.raw(x)), abs=1e-15)


def test_mollifier_scalar_and_vector_paths_agree():
    g = ex.MollifierSpec(delta=0.05)
    xs = np.linspace(-4.2, 4.2, 4001)
    assert np.max(np.abs(g(xs) - np.array([g.scalar(float(v)) for v in xs]))) < 1e-14


def test_mollifier_is_smooth_across_breakpoints():
    g = ex.MollifierSpec(delta=0.05)
    h = 1e-6
    for b in (1.0, 2.0, 3.0):
        xs = np.linspace(b - 0.06, b + 0.06, 241)
        fd = (g(xs + h) - g(xs - h)) / (2 * h)
        assert np.max(np.abs(fd - g.derivative(xs))) < 1e-5
        # the slope has no jump: its increments shrink linearly with the grid spacing
        coarse = np.max(np.abs(np.diff(g.derivative(np.linspace(b - 0.06, b + 0.06, 2001)))))
        fine = np.max(np.abs(np.diff(g.derivative(np.linspace(b - 0.06, b + 0.06, 4001)))))
        assert 1.8 < coarse / fine < 2.2


def test_mollifier_validation():
    with pytest.raises(ValueError):
        ex.MollifierSpec(delta=0.0)
    with pytest.raises(ValueError):
        ex.MollifierSpec(delta=0.6)


def test_mollipw_rejects_complex_arguments():
    vf = fx.sawtooth_expr()
    with pytest.raises(ValueError):
        ex.evaluate(vf, np.array([0.5 + 0.5j, 0.5 - 0.1j]))


# -- forward derivatives --------------------------------------------------

def test_forward_derivative_examples():
    assert ex.forward_derivative(ex.parse("sin(x1)"), [0.0], [1.0])[0] == 1
    lin = ex.parse("2*x1 - x2; 3*x2")
    v = np.array([0.3, -1.0])
    assert np.allclose(ex.forward_derivative(lin, [0.1, 5.0], v), ex.forward_derivative(lin, [-7.0, 2.0], v))


def test_forward_derivative_matches_central_differences():
    vf = ex.parse("sin(x1 + x2) * x2; cos(x1) * exp(x2) - x1^3 / 6")
    f = ex.compile_field(vf)
    rng = np.random.default_rng(0)
    h = 1e-6
    for _ in range(50):
        x = rng.uniform(-2, 2, 2)
        v = rng.normal(size=2)
        fd = (f(x + h * v) - f(x - h * v)) / (2 * h)
        assert np.max(np.abs(ex.forward_derivative(vf, x, v) - fd)) <= 1e-7


def test_forward_derivative_through_mollifier():
    vf = fx.sawtooth_expr(0.05)
    f = ex.compile_field(vf)
    h = 1e-7
    for s in (0.3, 0.98, 1.0, 1.03, 2.04, 2.5):
        x = np.array([s / 2, s / 2])
        v = np.array([1.0, 0.0])
        fd = (f(x + h * v) - f(x - h * v)) / (2 * h)
        assert np.max(np.abs(ex.forward_derivative(vf, x, v) - fd)) < 1e-5


def test_jacobian_of_linear_field():
    J = ex.jacobian(ex.parse("2*x1 - x2; 3*x2"), [1.0, 1.0])
    assert np.allclose(J, [[2, -1], [0, 3]])


# -- Taylor extraction ----------------------------------------------------

def test_taylor_sine():
    t = ex.taylor(ex.parse("sin(x1)"), 7)
    assert t == PolyVF(1, {(0, (1,)): 1, (0, (3,)): G(pv.Q(-1, 6)),
                           (0, (5,)): G(pv.Q(1, 120)), (0, (7,)): G(pv.Q(-1, 5040))})


def test_taylor_sine_of_sum_degree_three():
    t = ex.taylor(fx.sine_expr(), 3)
    s = PolyVF(2, {(i, q): 1 for i in (0, 1) for q in ((1, 0), (0, 1))})
    cube = pv.substitute(PolyVF(2, {(0, (3, 0)): 1, (1, (0, 3)): 1}), [s], 0)[0]
    assert t == s + pv.scale(cube, G(pv.Q(-1, 6)))


def test_taylor_rejects_mollifier():
    with pytest.raises(ex.NotAnalyticAtOrigin):
        ex.taylor(fx.sawtooth_expr(), 3)


@given(fields(max_degree=4))
def test_taylor_round_trip_of_polynomial(f):
    assert ex.taylor(ex.from_polyvf(f), f.degree) == f


def test_taylor_exp_and_cos():
    t = ex.taylor(ex.parse("exp(x1) - cos(x1)"), 4)
    assert t == PolyVF(1, {(0, (1,)): 1, (0, (2,)): 1, (0, (3,)): G(pv.Q(1, 6))})


def test_taylor_truncation_error_bound():
    vf = ex.parse("sin(x1 + x2); x1 * cos(x2)")
    d = 5
    t = ex.taylor(vf, d)
    f = ex.compile_field(vf)
    rng = np.random.default_rng(1)
    C = 2 * 2 ** (d + 1) / math.factorial(d + 1)  # next coefficient of sin(x1+x2), with margin
    for _ in range(50):
        x = rng.normal(size=2) + 1j * rng.normal(size=2)
        x *= rng.uniform(0, 0.1) / np.linalg.norm(x)
        r = np.linalg.norm(x)
        assert np.max(np.abs(t(x) - f(x))) <= C * r ** (d + 1) + 1e-16


def test_taylor_with_parameters():
    vf = ex.parse("a*sin(x1)", params={"a": 0.5})
    assert ex.taylor(vf, 1) == PolyVF(1, {(0, (1,)): G(pv.Q(1, 2))})
