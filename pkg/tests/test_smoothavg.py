import math

import numpy as np
import pytest
import scipy.integrate as spi
import scipy.special as ssp

from rgnf import expr as ex
from rgnf import polyvec as pv
from rgnf import rgcore as rg
from rgnf import smoothavg as sa
from rgnf import spectra as sp
from rgnf.polyvec import PolyVF
from rgnf.spectra import DiagLinearPart

from conftest import G, I, fx

OSC = fx.OSCILLATOR


@pytest.fixture(scope="module")
def pf():
    return sa.PeriodicFlow(OSC)


def points(rng, n=2, count=10, radius=1.0):
    out = []
    for _ in range(count):
        z = rng.normal(size=n) + 1j * rng.normal(size=n)
        out.append(z * rng.uniform(0.1, radius) / np.linalg.norm(z))
    return out


# -- PeriodicFlow ---------------------------------------------------------

def test_period_and_identity(pf):
    assert pf.period == pytest.approx(2 * math.pi)
    assert pf.period_residual() < 1e-14
    p3 = sa.PeriodicFlow(DiagLinearPart([I, G(0, pv.Q(2, 3)), 0]))
    assert p3.period == pytest.approx(6 * math.pi)
    assert p3.period_residual() < 1e-14


def test_non_imaginary_rejected():
    with pytest.raises(sa.NotPurelyImaginary):
        sa.PeriodicFlow(DiagLinearPart([1, -1]))


def test_sample_count_power_of_two():
    with pytest.raises(ValueError):
        sa.PeriodicFlow(OSC, M=100)


def test_incommensurate_frequencies():
    A = DiagLinearPart.numeric([1j, math.sqrt(2) * 1j])
    with pytest.raises(sa.NonCommensurateFrequencies):
        sa.PeriodicFlow(A)
    with pytest.warns(sa.LongWindowWarning):
        pl = sa.PeriodicFlow(A, long_window=True)
    g = PolyVF(2, {(0, (2, 1)): 1, (0, (0, 1)): 1, (1, (1, 1)): 1})
    x = np.array([0.4 + 0.1j, 0.3 - 0.2j])
    # no monomial of g is resonant for this spectrum, so every long-window mean tends to 0
    assert np.max(np.abs(sa.average_PK(pl, g, x))) < 1e-3
    with pytest.raises(sa.NonCommensurateFrequencies):
        sa.qpi_evaluate(pl, g, x)


# -- flow_conjugate -------------------------------------------------------

def test_flow_conjugate_examples(pf):
    g = fx.sine_expr()
    x = np.array([0.7 + 0.2j, -0.1j])
    gx = ex.evaluate(g, x)
    assert np.allclose(sa.flow_conjugate(pf, g, 0.0, x), gx, atol=1e-15)
    assert np.allclose(sa.flow_conjugate(pf, g, pf.period, x), gx, atol=1e-13)
    r = 0.8
    for s in np.linspace(0, 2 * math.pi, 10):
        v = sa.flow_conjugate(pf, g, s, np.array([r, r]))
        assert v[0] == pytest.approx(np.exp(-1j * s) * math.sin(2 * r * math.cos(s)), abs=1e-14)


# -- average_PK and qpi_evaluate ------------------------------------------

def test_average_of_resonant_and_nonresonant_monomials(pf):
    x = np.array([0.6 - 0.3j, 0.2 + 0.5j])
    k = PolyVF.monomial(2, 0, (2, 1))
    assert np.allclose(sa.average_PK(pf, k, x), k(x), atol=1e-15, rtol=1e-14)
    assert np.max(np.abs(sa.average_PK(pf, PolyVF.monomial(2, 0, (0, 1)), x))) < 1e-13
    assert np.max(np.abs(sa.qpi_evaluate(pf, k, x))) < 1e-13
    assert sa.qpi_evaluate(pf, PolyVF.monomial(2, 0, (0, 1)), x)[0] == pytest.approx(0.5j * x[1], abs=1e-12)


def test_bessel_value_at_unit_radius(pf):
    P = sa.average_PK(pf, fx.sine_expr(), np.array([1.0, 1.0]))
    assert P[0].real == pytest.approx(ssp.j1(2.0), abs=1e-12)
    assert P[0].real == pytest.approx(0.5767248078, abs=1e-10)


def test_average_matches_exact_projection(pf):
    rng = np.random.default_rng(0)
    for _ in range(10):
        g = fx.random_field(rng, 2, 5, 8)
        K, H = sp.project_K(OSC, g), sp.pseudo_inverse_Q(OSC, sp.project_I(OSC, g))
        for x in points(rng, count=4):
            assert np.max(np.abs(sa.average_PK(pf, g, x) - K(x))) < 1e-11
            assert np.max(np.abs(sa.qpi_evaluate(pf, g, x) - H(x))) < 1e-10


def test_average_is_equivariant(pf):
    rng = np.random.default_rng(1)
    g = ex.parse("sin(x1 + x2) * x1; x2^2 * exp(x1)")
    for x in points(rng, count=5):
        s0 = rng.uniform(0, 2 * math.pi)
        E = pf.exp(s0)
        assert np.max(np.abs(sa.average_PK(pf, g, E * x) - E * sa.average_PK(pf, g, x))) < 1e-10


def test_qpi_has_zero_mean_along_the_flow(pf):
    g = fx.sine_expr()
    x = np.array([0.9 + 0.2j, 0.9 - 0.2j])
    s = pf.sample_times()
    vals = np.stack([sa.flow_conjugate(pf, lambda y: sa.qpi_evaluate(pf, g, y), t, x) for t in s[::4]])
    assert np.max(np.abs(vals.mean(axis=0))) < 1e-11


def test_qpi_is_antiderivative_along_the_flow(pf):
    """Quadrature of the conjugated signal reproduces Q P_I(g), P_K(g) and the flow."""
    g = fx.sine_expr()
    rng = np.random.default_rng(2)
    x = np.array([0.7 + 0.1j, 0.4 - 0.3j])
    qpi = lambda y: sa.qpi_evaluate(pf, g, y)  # noqa: E731
    for t in rng.uniform(0, pf.period, 3):
        integrand = lambda s: sa.flow_conjugate(pf, g, s - t, x)  # noqa: E731
        lhs = spi.quad_vec(integrand, 0.0, t, epsabs=1e-13, epsrel=1e-13)[0]
        rhs = qpi(x) - pf.exp(t) * qpi(pf.exp(-t) * x) + sa.average_PK(pf, g, x) * t
        assert np.max(np.abs(lhs - rhs)) < 1e-8


def test_spectral_convergence(pf):
    g = fx.sine_expr()
    p2 = pf.with_samples(512)
    for r in (0.5, 2.0, 4.5):
        x = np.array([r, r], dtype=complex)
        assert np.max(np.abs(sa.average_PK(pf, g, x) - sa.average_PK(p2, g, x))) < 1e-12


def test_fourier_table_checks(pf):
    g = fx.sine_expr()
    tab = sa.fourier_table(pf, g, np.array([1.2, 1.2], dtype=complex))
    assert tab.mean_residual < 1e-14
    assert tab.parseval_residual < 1e-10
    assert tab.mode_count == pf.M - 1
    d = sa.averaging_report(pf, g, [[1.2, 1.2]])[0]
    assert set(d) == {"point", "PK", "mode_count", "parseval_residual", "period"}
    assert d["PK"][0][0] == pytest.approx(ssp.j1(2.4), abs=1e-12)


# -- first-order normal form ----------------------------------------------

def test_first_order_sine_field_is_bessel(pf):
    r = np.arange(1, 11) * 0.5
    rdot, wdot = sa.radial_profile(pf, fx.sine_expr(), r)
    assert np.max(np.abs(rdot - ssp.j1(2 * r))) < 1e-8
    nf = sa.first_order_nf(pf, fx.sine_expr(), eps=0.1)
    for ri in r:
        z = np.array([ri * np.exp(0.3j), ri * np.exp(-0.3j)])
        rd, td = sa.polar_rates(nf(z)[0], z[0])
        assert rd == pytest.approx(0.1 * ssp.j1(2 * ri), abs=1e-9)
        assert td == pytest.approx(1.0, abs=1e-10)


def test_first_order_zero_field(pf):
    nf = sa.first_order_nf(pf, PolyVF.zero(2), eps=0.3)
    y = np.array([0.3 + 0.4j, 0.1j])
    assert np.allclose(nf(y), OSC.lam * y, atol=1e-16)


# -- second order ---------------------------------------------------------

def test_second_order_R2_matches_exact_engine(pf):
    ps = fx.random_oscillator_series(0)
    nf = rg.compute_Rk(ps, 2)
    rng = np.random.default_rng(3)
    for y in points(rng, count=6, radius=0.8):
        num = sa.second_order_R2(pf, ps.gk(1), ps.gk(2), y)
        assert np.max(np.abs(num - nf.Rk[1](y))) < 1e-6


def test_second_order_R2_vanishes_for_resonant_input(pf):
    g1 = PolyVF(2, {(0, (2, 1)): G(1, 2), (1, (1, 2)): G(1, -2)})
    y = np.array([0.5 + 0.2j, 0.5 - 0.2j])
    assert np.max(np.abs(sa.second_order_R2(pf, g1, None, y))) < 1e-8


def test_second_order_angular_shift(pf):
    r = 0.01
    z = np.array([r, r], dtype=complex)
    val = sa.second_order_term(pf, fx.sine_expr(), None, z)
    _, wdot = sa.polar_rates(val[0], z[0])
    assert wdot == pytest.approx(-0.5, abs=1e-3)


def test_dimension_checks(pf):
    with pytest.raises(pv.DimensionError):
        sa.average_PK(pf, fx.sine_expr(), np.zeros(3))
