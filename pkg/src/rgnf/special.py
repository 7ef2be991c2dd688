"""Bessel functions of the first kind by power series, and their zeros.

Used as independent reference values for the averaged oscillator fields.
Accurate to roughly 1e-13 for ``|x| <= 10``; cancellation in the alternating
series costs about three more digits by ``|x| = 20``.
"""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np


def _jn_scalar(n: int, x: float, terms: int = 80) -> float:
    half = x / 2.0
    acc = []
    term = half ** n / math.factorial(n)
    for m in range(terms):
        acc.append(term)
        term *= -(half * half) / ((m + 1) * (m + 1 + n))
        if abs(term) < 1e-18 * max(1.0, abs(acc[0])) and m > 2 * abs(half):
            break
    return math.fsum(acc)


def jn(n: int, x):
    """``J_n(x) = sum_m (-1)^m (x/2)^{2m+n} / (m! (m+n)!)`` for ``n >= 0``."""
    if n < 0:
        raise ValueError("order must be non-negative")
    xs = np.asarray(x, dtype=float)
    out = np.vectorize(lambda v: _jn_scalar(n, float(v)), otypes=[float])(xs)
    return out if out.ndim else float(out)


def j0(x):
    return jn(0, x)


def j1(x):
    return jn(1, x)


def j1_prime(x):
    """``J_1'(x) = (J_0(x) - J_2(x)) / 2``."""
    return 0.5 * (np.asarray(jn(0, x)) - np.asarray(jn(2, x)))


def j1_2r_taylor(max_degree: int) -> list:
    """Exact Taylor coefficients of ``J_1(2r)`` in ``r``: ``(-1)^k / (k! (k+1)!)``
    for the powers ``r^{2k+1} <= r^max_degree``."""
    return [Fraction((-1) ** k, math.factorial(k) * math.factorial(k + 1))
            for k in range((max_degree - 1) // 2 + 1)]


def bisect_root(f, a: float, b: float, tol: float = 1e-14, max_iter: int = 200) -> float:
    fa, fb = f(a), f(b)
    if fa == 0:
        return a
    if fb == 0:
        return b
    if fa * fb > 0:
        raise ValueError(f"no sign change on [{a}, {b}]")
    for _ in range(max_iter):
        c = 0.5 * (a + b)
        fc = f(c)
        if fc == 0 or b - a < tol * max(1.0, abs(c)):
            return c
        if fa * fc < 0:
            b, fb = c, fc
        else:
            a, fa = c, fc
    return 0.5 * (a + b)


def j1_zeros(count: int, step: float = 0.1) -> list:
    """First ``count`` positive zeros of ``J_1`` by scanning and bisection."""
    zeros = []
    x = step
    f_prev = _jn_scalar(1, x)
    while len(zeros) < count:
        x_new = x + step
        f_new = _jn_scalar(1, x_new)
        if f_prev * f_new < 0:
            zeros.append(bisect_root(lambda v: _jn_scalar(1, v), x, x_new))
        x, f_prev = x_new, f_new
    return zeros
