"""Reference systems and seeded random generators.

Two planar oscillators ``x1' = x2 + 2 eps g(x1), x2' = -x1`` serve as worked
examples: ``g = sin`` and ``g`` a mollified alternating piecewise-linear
function.  With ``x1 = z1 + z2``, ``x2 = i (z1 - z2)`` both become
``z' = diag(i, -i) z + eps (g(z1 + z2), g(z1 + z2))``.
"""
from __future__ import annotations

import math

import numpy as np

from . import expr as ex
from . import polyvec as pv
from .polyvec import GaussianRational, PolyVF
from .rgcore import PerturbationSeries
from .spectra import DiagLinearPart, project_I, project_K

OSCILLATOR = DiagLinearPart([pv.I, -pv.I])

# radius scale turning |(x1, x2)| into the reported radius
SINE_RADIUS_SCALE = 0.5  # r = |z1| = |x| / 2, the variable of J_1(2r)
SAWTOOTH_RADIUS_SCALE = 1.0  # Euclidean radius |x|


def sine_expr() -> ex.VectorFieldDef:
    """``(sin(z1 + z2), sin(z1 + z2))`` in diagonal coordinates."""
    return ex.parse("sin(x1 + x2); sin(x1 + x2)")


def sine_series(degree: int = 7, m_max: int = 6) -> PerturbationSeries:
    """Degree-``degree`` Taylor truncation of the diagonalized sine oscillator."""
    g1 = ex.taylor(sine_expr(), degree, constant_free=True)
    return PerturbationSeries(OSCILLATOR, [g1], m_max=m_max)


def sine_real_field(eps: float):
    def f(t, x):
        return np.array([x[1] + 2 * eps * math.sin(x[0]), -x[0]])

    return f


def sawtooth_spec(delta: float = 0.05) -> ex.MollifierSpec:
    return ex.MollifierSpec(slopes=(1.0, -1.0), width=1.0, delta=delta, odd=True)


def sawtooth_expr(delta: float = 0.05) -> ex.VectorFieldDef:
    """``(g~(z1 + z2), g~(z1 + z2))`` with the mollified alternating function."""
    return ex.parse("mollipw(x1 + x2); mollipw(x1 + x2)", mollifier=sawtooth_spec(delta))


def sawtooth_real_field(eps: float, delta: float = 0.05):
    spec = sawtooth_spec(delta)

    def f(t, x):
        return np.array([x[1] + 2 * eps * spec.scalar(float(x[0])), -x[0]])

    return f


def to_diagonal(x) -> np.ndarray:
    """``(x1, x2) -> (z1, z2)`` with ``x1 = z1 + z2``, ``x2 = i (z1 - z2)``."""
    x = np.asarray(x)
    return np.array([(x[0] - 1j * x[1]) / 2, (x[0] + 1j * x[1]) / 2])


def to_real(z) -> np.ndarray:
    z = np.asarray(z)
    return np.array([np.real(z[0] + z[1]), np.real(1j * (z[0] - z[1]))])


# ---------------------------------------------------------------------------
# random fields

def random_rational(rng: np.random.Generator, max_num: int = 3, max_den: int = 3) -> GaussianRational:
    """Nonzero Gaussian rational with small numerators and denominators."""
    while True:
        re = pv.Q(int(rng.integers(-max_num, max_num + 1)), int(rng.integers(1, max_den + 1)))
        im = pv.Q(int(rng.integers(-max_num, max_num + 1)), int(rng.integers(1, max_den + 1)))
        if re or im:
            return GaussianRational(re, im)


def random_exponent(rng: np.random.Generator, dim: int, degree: int) -> tuple:
    cuts = np.sort(rng.integers(0, degree + 1, size=dim - 1))
    parts = np.diff(np.concatenate([[0], cuts, [degree]]))
    return tuple(int(v) for v in parts)


def random_field(rng: np.random.Generator, dim: int, max_degree: int, n_terms: int = 4,
                 min_degree: int = 1) -> PolyVF:
    """Sparse constant-free random field with ``n_terms`` monomials (before merging)."""
    terms = {}
    for _ in range(n_terms):
        d = int(rng.integers(min_degree, max_degree + 1))
        key = (int(rng.integers(0, dim)), random_exponent(rng, dim, d))
        terms[key] = terms.get(key, pv.ZERO) + random_rational(rng)
    return PolyVF(dim, terms, constant_free=True)


def random_eigenvalues(rng: np.random.Generator, dim: int, imaginary: bool = False) -> DiagLinearPart:
    """Small-integer eigenvalues, chosen so that resonances are common."""
    vals = []
    for _ in range(dim):
        im = int(rng.integers(-2, 3))
        re = 0 if imaginary else int(rng.integers(-2, 3))
        vals.append(GaussianRational(re, im))
    return DiagLinearPart(vals)


def random_VI(rng, A: DiagLinearPart, max_degree: int, n_terms: int = 4, tries: int = 50) -> PolyVF:
    for _ in range(tries):
        f = project_I(A, random_field(rng, A.dim, max_degree, n_terms))
        if not f.is_zero:
            return f
    return PolyVF.zero(A.dim)


def random_VK(rng, A: DiagLinearPart, max_degree: int, n_terms: int = 4, tries: int = 50) -> PolyVF:
    """Random resonant field built from the enumerated resonant monomials."""
    from .spectra import resonant_monomials

    keys = resonant_monomials(A, max_degree)
    if not keys:
        return PolyVF.zero(A.dim)
    terms = {}
    for _ in range(n_terms):
        key = keys[int(rng.integers(0, len(keys)))]
        terms[key] = terms.get(key, pv.ZERO) + random_rational(rng)
    return PolyVF(A.dim, terms)


def random_oscillator_series(seed: int = 0, max_degree: int = 3, n_terms: int = 6,
                             m_max: int = 6) -> PerturbationSeries:
    """Seeded dim-2 system with ``lambda = (i, -i)`` and random ``g_1, g_2``."""
    rng = np.random.default_rng(seed)
    g1 = random_field(rng, 2, max_degree, n_terms)
    g2 = random_field(rng, 2, max_degree, n_terms)
    return PerturbationSeries(OSCILLATOR, [g1, g2], m_max=m_max)
