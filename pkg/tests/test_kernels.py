import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given

from rgnf import dynamics as dy
from rgnf import kernels
from rgnf.kernels import _pykernels
from rgnf.polyvec import PolyVF

from conftest import as_float_field, fields, fx

ck = pytest.importorskip("rgnf.kernels._ckernels")


def packed(f):
    c, e, v = f.pack()
    return c, np.ascontiguousarray(e), v


@given(fields(max_degree=4))
def test_point_evaluation_agrees(f):
    rng = np.random.default_rng(f.dim)
    x = rng.normal(size=f.dim) + 1j * rng.normal(size=f.dim)
    c, e, v = packed(f)
    a = _pykernels.poly_eval(c, e, v, x, f.dim)
    b = np.asarray(ck.poly_eval(c, e, v, x, f.dim))
    assert np.allclose(a, b, rtol=1e-13, atol=1e-13)
    assert np.allclose(a, as_float_field(f)(x), rtol=1e-12, atol=1e-12)


@given(fields(max_degree=4))
def test_batch_evaluation_agrees(f):
    rng = np.random.default_rng(7)
    X = rng.normal(size=(f.dim, 25)) + 1j * rng.normal(size=(f.dim, 25))
    c, e, v = packed(f)
    a = _pykernels.poly_eval_batch(c, e, v, X, f.dim)
    b = np.asarray(ck.poly_eval_batch(c, e, v, X, f.dim))
    assert np.allclose(a, b, rtol=1e-13, atol=1e-13)


def test_empty_field():
    c, e, v = packed(PolyVF.zero(3))
    x = np.ones(3, complex)
    assert not np.any(np.asarray(ck.poly_eval(c, e, v, x, 3)))
    assert not np.any(_pykernels.poly_eval(c, e, v, x, 3))


def test_rk4_kernels_agree():
    ps = fx.random_oscillator_series(0)
    f = ps.gk(1) + ps.gk(2)
    c, e, v = packed(f)
    x0 = np.array([0.4 + 0.1j, 0.4 - 0.1j])
    a = _pykernels.rk4_poly(ps.A.lam, c, e, v * 0.05, x0, 0.01, 300)
    b = np.asarray(ck.rk4_poly(ps.A.lam, c, e, v * 0.05, x0, 0.01, 300))
    assert np.max(np.abs(a - b)) < 1e-12


def test_kernel_rk4_matches_generic_rk4():
    ps = fx.random_oscillator_series(1)
    g = ps.gk(1)
    lam = ps.A.lam
    tr = dy.rk4_polynomial(lam, [(0.05, g)], [0.3, 0.3], 2.0, 200)
    ref = dy.rk4(lambda t, x: lam * x + 0.05 * g(x), np.array([0.3, 0.3], complex), (0, 2.0), 0.01)
    assert np.max(np.abs(tr.states - ref.states)) < 1e-12


def test_backend_selection():
    assert kernels.BACKEND == "cython"
    env = dict(os.environ, RGNF_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from rgnf import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
