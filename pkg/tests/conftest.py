import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from rgnf import fixtures as fx
from rgnf import polyvec as pv
from rgnf.polyvec import GaussianRational, PolyVF

settings.register_profile(
    "rgnf", max_examples=40, deadline=None, derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("rgnf")

seeds = st.integers(min_value=0, max_value=2**31 - 1)
dims = st.integers(min_value=1, max_value=3)


@st.composite
def fields(draw, dim=None, max_degree=4, n_terms=4):
    """Random constant-free PolyVF built from a drawn seed."""
    n = draw(dims) if dim is None else dim
    rng = np.random.default_rng(draw(seeds))
    return fx.random_field(rng, n, max_degree, n_terms)


@st.composite
def field_tuples(draw, k, max_degree=3, n_terms=3):
    n = draw(dims)
    rng = np.random.default_rng(draw(seeds))
    return tuple(fx.random_field(rng, n, max_degree, n_terms) for _ in range(k))


@st.composite
def systems(draw, max_degree=4, imaginary=False):
    """``(A, rng)`` with small-integer eigenvalues; resonances are frequent."""
    n = draw(dims)
    rng = np.random.default_rng(draw(seeds))
    return fx.random_eigenvalues(rng, n, imaginary=imaginary), rng


def x(dim, i):
    """Monomial exponent of the single variable ``x_{i+1}``."""
    return tuple(1 if j == i else 0 for j in range(dim))


def as_float_field(f: PolyVF):
    """Independent float evaluator (does not use the packed kernels)."""
    items = [(i, np.array(q), complex(c)) for (i, q), c in f.terms.items()]

    def ev(p):
        p = np.asarray(p, dtype=complex)
        out = np.zeros(f.dim, dtype=complex)
        for i, q, c in items:
            out[i] += c * np.prod(p ** q)
        return out

    return ev


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def G(re, im=0):
    return GaussianRational(re, im)


ZERO, ONE, I = pv.ZERO, pv.ONE, pv.I
