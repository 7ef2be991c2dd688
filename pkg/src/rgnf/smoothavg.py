"""Averaging over a periodic linear flow for smooth (non-polynomial) fields.

For ``A = diag(i w_1, ..., i w_n)`` with commensurate ``w_j`` the flow
``e^{As}`` is periodic with period ``T``.  For a field ``g`` the signal

    v(s) = e^{-As} g(e^{As} x)

is ``T``-periodic; with Fourier coefficients ``c(nu, x)`` on the modes
``exp(2 pi i nu s / T)``

    P_K(g)(x)   = c(0, x)
    Q P_I(g)(x) = sum_{nu != 0} c(nu, x) / (2 pi i nu / T)

which are the resonant part and the zero-mean antiderivative of the
non-resonant part.  Coefficients are computed with an FFT over ``M``
uniform samples per period.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from . import expr as ex
from .polyvec import DimensionError, PolyVF
from .spectra import DiagLinearPart

LONG_WINDOW = 1.0e4 * 2 * math.pi


class NonCommensurateFrequencies(ValueError):
    """The linear flow has no common period."""


class NotPurelyImaginary(ValueError):
    """Averaging over the linear flow needs purely imaginary eigenvalues."""


class LongWindowWarning(UserWarning):
    """Average taken over a finite window instead of an exact period."""


def _rational_gcd(values) -> Fraction:
    num = 0
    den = 1
    for v in values:
        if v == 0:
            continue
        v = abs(v)
        num = math.gcd(num, v.numerator)
        den = den * v.denominator // math.gcd(den, v.denominator)
    return Fraction(num, den) if num else Fraction(0)


class PeriodicFlow:
    """The periodic linear flow ``s -> e^{As}`` used for averaging.

    Parameters
    ----------
    A : DiagLinearPart
        Purely imaginary eigenvalues ``i w_j``.  In exact mode the ``w_j``
        are rationals; numeric eigenvalues are rationalized with
        denominators up to ``max_denominator`` and rejected if that fails.
    base_frequency : float
        ``w_0``; the actual frequencies are ``w_0 w_j``.
    M : int
        Samples per period (power of two).
    long_window : bool
        Accept incommensurate frequencies by averaging over a window of
        length ``1e4 * 2 pi`` (emits :class:`LongWindowWarning`).
    """

    def __init__(self, A: DiagLinearPart, base_frequency: float = 1.0, M: int = 256,
                 long_window: bool = False, max_denominator: int = 1000):
        if M < 4 or M & (M - 1):
            raise ValueError("M must be a power of two, at least 4")
        if not A.purely_imaginary:
            raise NotPurelyImaginary(f"eigenvalues {A.eigenvalues} are not all on the imaginary axis")
        self.A = A
        self.M = int(M)
        self.base_frequency = float(base_frequency)
        self.long_window = False
        if A.exact:
            self.omegas = [Fraction(int(v.im.numerator), int(v.im.denominator)) for v in A.eigenvalues]
        else:
            omegas = []
            for v in A.eigenvalues:
                q = Fraction(v.imag).limit_denominator(max_denominator)
                if abs(float(q) - v.imag) > A.tol:
                    omegas = None
                    break
                omegas.append(q)
            self.omegas = omegas
        if self.omegas is None:
            if not long_window:
                raise NonCommensurateFrequencies(
                    f"frequencies {[v.imag for v in A.eigenvalues]} have no common period; "
                    "pass long_window=True to average over a long finite window")
            warnings.warn("incommensurate frequencies: averaging over a window of 1e4*2*pi",
                          LongWindowWarning, stacklevel=2)
            self.long_window = True
            self.period = LONG_WINDOW
            self.lam = 1j * self.base_frequency * np.array([v.imag for v in A.eigenvalues])
        else:
            g = _rational_gcd(self.omegas)
            self.period = 2 * math.pi / (self.base_frequency * float(g)) if g else 2 * math.pi
            self.lam = 1j * self.base_frequency * np.array([float(w) for w in self.omegas])

    @property
    def dim(self) -> int:
        return self.A.dim

    def with_samples(self, M: int) -> "PeriodicFlow":
        return PeriodicFlow(self.A, self.base_frequency, M, self.long_window)

    def sample_times(self, M: int | None = None) -> np.ndarray:
        M = self.M if M is None else M
        return np.arange(M) * (self.period / M)

    def exp(self, s) -> np.ndarray:
        """``diag(e^{A s})`` with shape ``(n,)`` or ``(n, len(s))``."""
        s = np.asarray(s, dtype=float)
        return np.exp(np.multiply.outer(self.lam, s))

    def period_residual(self) -> float:
        """``max |e^{AT} - 1|``."""
        return float(np.max(np.abs(self.exp(self.period) - 1.0)))


def as_field(g, params=None) -> Callable:
    """Vectorized callable ``x (n, P) -> (n, P)`` for a field given in any supported form."""
    if isinstance(g, ex.VectorFieldDef):
        return ex.compile_field(g, params)
    if isinstance(g, PolyVF):
        return g
    if callable(g):
        return g
    raise TypeError(f"cannot use {type(g).__name__} as a vector field")


def _points(x):
    x = np.asarray(x, dtype=np.complex128)
    single = x.ndim == 1
    return (x[:, None] if single else x), single


def flow_conjugate(pf: PeriodicFlow, g, s, x) -> np.ndarray:
    """``e^{-As} g(e^{As} x)`` for scalar ``s``."""
    f = as_field(g)
    x = np.asarray(x, dtype=np.complex128)
    if x.shape[0] != pf.dim:
        raise DimensionError(f"point has {x.shape[0]} entries, flow has dim {pf.dim}")
    E = pf.exp(s)
    if x.ndim == 2:
        E = E[:, None]
    return f(E * x) / E


def _signal(pf: PeriodicFlow, f, X, M: int) -> np.ndarray:
    """Samples ``v(s_k)`` with shape ``(n, P, M)`` for points ``X (n, P)``."""
    n, P = X.shape
    E = pf.exp(pf.sample_times(M))  # (n, M)
    Y = (E[:, None, :] * X[:, :, None]).reshape(n, P * M)
    V = np.asarray(f(Y), dtype=np.complex128).reshape(n, P, M)
    return V / E[:, None, :]


def _mode_numbers(M: int) -> np.ndarray:
    return np.fft.fftfreq(M, d=1.0 / M).astype(int)


@dataclass
class FourierTable:
    """Fourier coefficients of ``s -> e^{-As} g(e^{As} x)`` at one point.

    ``coeffs[:, k]`` multiplies ``exp(i exponents[k] s)``; the Nyquist mode is
    excluded.
    """

    point: np.ndarray
    period: float
    M: int
    modes: np.ndarray
    exponents: np.ndarray
    coeffs: np.ndarray
    parseval_residual: float
    mean_residual: float

    @property
    def mode_count(self) -> int:
        return len(self.modes)

    def coefficient(self, nu: int) -> np.ndarray:
        k = np.nonzero(self.modes == nu)[0]
        if len(k) == 0:
            return np.zeros(self.coeffs.shape[0], dtype=np.complex128)
        return self.coeffs[:, k[0]]

    def to_dict(self) -> dict:
        c0 = self.coefficient(0)
        return {
            "point": [[float(v.real), float(v.imag)] for v in self.point],
            "PK": [[float(v.real), float(v.imag)] for v in c0],
            "mode_count": int(self.mode_count),
            "parseval_residual": float(self.parseval_residual),
            "period": float(self.period),
        }


def _require_periodic(pf: PeriodicFlow, what: str):
    if pf.long_window:
        raise NonCommensurateFrequencies(f"{what} needs a periodic flow; the long-window mode only averages")


def fourier_table(pf: PeriodicFlow, g, x) -> FourierTable:
    """FFT of the conjugated signal at a single point."""
    _require_periodic(pf, "fourier_table")
    f = as_field(g)
    x = np.asarray(x, dtype=np.complex128)
    if x.shape != (pf.dim,):
        raise DimensionError(f"expected a point of shape ({pf.dim},)")
    M = pf.M
    V = _signal(pf, f, x[:, None], M)[:, 0, :]
    C = np.fft.fft(V, axis=1) / M
    modes = _mode_numbers(M)
    energy = float(np.sum(np.abs(V) ** 2)) / M
    spec = float(np.sum(np.abs(C) ** 2))
    parseval = abs(spec - energy) / energy if energy else abs(spec)
    mean_res = float(np.max(np.abs(C[:, 0] - V.mean(axis=1))))
    keep = modes != -(M // 2)
    return FourierTable(
        point=x, period=pf.period, M=M, modes=modes[keep],
        exponents=modes[keep] * (2 * math.pi / pf.period), coeffs=C[:, keep],
        parseval_residual=parseval, mean_residual=mean_res,
    )


def average_PK(pf: PeriodicFlow, g, x) -> np.ndarray:
    """Resonant part ``P_K(g)(x)``: the period average of the conjugated signal.

    ``x`` may be a single point ``(n,)`` or a batch ``(n, P)``.
    """
    f = as_field(g)
    X, single = _points(x)
    if X.shape[0] != pf.dim:
        raise DimensionError(f"point has {X.shape[0]} entries, flow has dim {pf.dim}")
    if pf.long_window:
        M = int(2 ** math.ceil(math.log2(64 * 1.0e4)))
        out = np.zeros(X.shape, dtype=np.complex128)
        step = 4096
        times = pf.sample_times(M)
        for a in range(0, M, step):
            s = times[a:a + step]
            E = pf.exp(s)
            n, P = X.shape
            Y = (E[:, None, :] * X[:, :, None]).reshape(n, -1)
            V = np.asarray(f(Y)).reshape(n, P, len(s)) / E[:, None, :]
            out += V.sum(axis=2)
        out /= M
    else:
        out = _signal(pf, f, X, pf.M).mean(axis=2)
    return out[:, 0] if single else out


def qpi_evaluate(pf: PeriodicFlow, g, x) -> np.ndarray:
    """``Q P_I(g)(x) = sum_{nu != 0} c(nu, x) / (2 pi i nu / T)``."""
    _require_periodic(pf, "qpi_evaluate")
    f = as_field(g)
    X, single = _points(x)
    if X.shape[0] != pf.dim:
        raise DimensionError(f"point has {X.shape[0]} entries, flow has dim {pf.dim}")
    M = pf.M
    C = np.fft.fft(_signal(pf, f, X, M), axis=2) / M
    modes = _mode_numbers(M)
    w = 1j * modes * (2 * math.pi / pf.period)
    inv = np.zeros(M, dtype=np.complex128)
    keep = (modes != 0) & (modes != -(M // 2))
    inv[keep] = 1.0 / w[keep]
    out = (C * inv).sum(axis=2)
    return out[:, 0] if single else out


class AveragedField:
    """``y -> A y + sum_k eps^k F_k(y)`` for numeric order terms ``F_k``."""

    def __init__(self, pf: PeriodicFlow, terms: list, eps: float):
        self.pf = pf
        self.terms = terms
        self.eps = eps

    def __call__(self, y):
        y = np.asarray(y, dtype=np.complex128)
        lam = self.pf.lam if y.ndim == 1 else self.pf.lam[:, None]
        out = lam * y
        for k, F in enumerate(self.terms, start=1):
            out = out + self.eps ** k * F(y)
        return out

    def rhs(self, t, y):
        return self(y)


def first_order_nf(pf: PeriodicFlow, g1, eps: float = 1.0) -> AveragedField:
    """First-order smooth normal form ``y' = Ay + eps P_K(g_1)(y)``."""
    f = as_field(g1)
    return AveragedField(pf, [lambda y: average_PK(pf, f, y)], eps)


def _directional(g, y, v):
    """``Dg(y) v`` with dual numbers when possible, otherwise central differences."""
    if isinstance(g, PolyVF):
        g = ex.from_polyvf(g)
    if isinstance(g, ex.VectorFieldDef):
        return ex.forward_derivative(g, y, v)
    return central_difference(g, y, v)


def central_difference(f: Callable, y, v, h: float | None = None) -> np.ndarray:
    """``Df(y) v`` by central differences with step ``1e-5 max(1, |y|)``.

    ``y`` and ``v`` may be batches ``(n, P)``; the step is taken along the
    unit direction and rescaled.
    """
    y = np.asarray(y, dtype=np.complex128)
    v = np.asarray(v, dtype=np.complex128)
    norm_axis = 0
    ny = np.sqrt(np.sum(np.abs(y) ** 2, axis=norm_axis))
    nv = np.sqrt(np.sum(np.abs(v) ** 2, axis=norm_axis))
    step = 1e-5 * np.maximum(1.0, ny) if h is None else np.full_like(ny, h, dtype=float)
    safe = np.where(nv > 0, nv, 1.0)
    u = v / safe
    d = (f(y + step * u) - f(y - step * u)) / (2 * step)
    return np.where(nv > 0, d * nv, 0.0)


def second_order_R2(pf: PeriodicFlow, g1, g2, y) -> np.ndarray:
    """``R_2(y) = Dg_1 . Q(g_1I) + g_2 - D(Q(g_1I)) . g_1K`` evaluated numerically.

    ``Dg_1`` uses dual numbers (when ``g1`` is an expression or polynomial);
    ``D(Q(g_1I))`` uses central differences on :func:`qpi_evaluate`, which
    assumes the field is holomorphic in ``y``.
    """
    f1 = as_field(g1)
    y = np.asarray(y, dtype=np.complex128)
    h1 = qpi_evaluate(pf, f1, y)
    g1K = average_PK(pf, f1, y)
    out = _directional(g1, y, h1)
    if g2 is not None:
        out = out + as_field(g2)(y)
    out = out - central_difference(lambda z: qpi_evaluate(pf, f1, z), y, g1K)
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("non-finite value in second-order evaluation; reduce the step or |y|")
    return out


def second_order_term(pf: PeriodicFlow, g1, g2, y) -> np.ndarray:
    """``P_K(R_2)(y)``: the period average of the conjugated ``R_2``."""
    return average_PK(pf, lambda z: second_order_R2(pf, g1, g2, z), y)


def second_order_nf(pf: PeriodicFlow, g1, g2, eps: float) -> AveragedField:
    f1 = as_field(g1)
    return AveragedField(pf, [lambda y: average_PK(pf, f1, y),
                              lambda y: second_order_term(pf, g1, g2, y)], eps)


# ---------------------------------------------------------------------------
# polar form for 2-D oscillators

def polar_rates(value, z1) -> tuple:
    """``(r', theta')`` contributions from ``z1' = value`` at ``z1 = r e^{i theta}``.

    ``r' = Re(value e^{-i theta})`` and ``theta' = Im(value e^{-i theta}) / r``.
    """
    z1 = np.asarray(z1, dtype=np.complex128)
    r = np.abs(z1)
    rot = np.asarray(value) * np.exp(-1j * np.angle(z1))
    return rot.real, rot.imag / r


def radial_profile(pf: PeriodicFlow, g, r, theta: float = 0.0) -> tuple:
    """First-order ``(r', theta' - w_1)`` per unit ``eps`` on the real slice
    ``z = (r e^{i theta}, r e^{-i theta})`` of a 2-D oscillator."""
    if pf.dim != 2:
        raise DimensionError("radial profile needs a 2-D flow")
    r = np.atleast_1d(np.asarray(r, dtype=float))
    z1 = r * np.exp(1j * theta)
    Y = np.vstack([z1, np.conj(z1)])
    P = average_PK(pf, g, Y)
    return polar_rates(P[0], z1)


def averaging_report(pf: PeriodicFlow, g, points) -> list:
    """JSON-ready ``{point, PK, mode_count, parseval_residual, period}`` per point."""
    return [fourier_table(pf, g, np.asarray(p, dtype=np.complex128)).to_dict() for p in points]


__all__ = [
    "PeriodicFlow", "FourierTable", "AveragedField", "NonCommensurateFrequencies", "NotPurelyImaginary",
    "LongWindowWarning", "flow_conjugate", "fourier_table", "average_PK", "qpi_evaluate",
    "first_order_nf", "second_order_R2", "second_order_term", "second_order_nf", "central_difference",
    "polar_rates", "radial_profile", "averaging_report", "as_field",
]
