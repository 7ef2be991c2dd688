"""Reference numpy implementations of the numeric kernels.

Selected automatically when the compiled extension is unavailable, or when
``RGNF_PURE_PYTHON=1`` is set.
"""
import numpy as np


def poly_eval(comps, exps, coeffs, x, dim):
    """Evaluate a packed polynomial field at one complex point."""
    out = np.zeros(dim, dtype=np.complex128)
    if len(coeffs) == 0:
        return out
    mono = np.prod(x[None, :] ** exps, axis=1)
    np.add.at(out, comps, coeffs * mono)
    return out


def poly_eval_batch(comps, exps, coeffs, X, dim):
    """Evaluate a packed polynomial field at the columns of ``X`` (dim, P)."""
    out = np.zeros((dim, X.shape[1]), dtype=np.complex128)
    if len(coeffs) == 0:
        return out
    mono = np.ones((len(coeffs), X.shape[1]), dtype=np.complex128)
    for j in range(dim):
        e = exps[:, j]
        if e.any():
            mono *= X[j][None, :] ** e[:, None]
    np.add.at(out, comps, coeffs[:, None] * mono)
    return out


def rk4_poly(lam, comps, exps, coeffs, x0, h, n_steps):
    """Classical RK4 for ``x' = diag(lam) x + p(x)``; returns all states."""
    dim = len(lam)
    lam = np.asarray(lam, dtype=np.complex128)
    states = np.empty((n_steps + 1, dim), dtype=np.complex128)
    x = np.array(x0, dtype=np.complex128)
    states[0] = x

    def f(y):
        return lam * y + poly_eval(comps, exps, coeffs, y, dim)

    for k in range(n_steps):
        k1 = f(x)
        k2 = f(x + 0.5 * h * k1)
        k3 = f(x + 0.5 * h * k2)
        k4 = f(x + h * k3)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        states[k + 1] = x
    return states
