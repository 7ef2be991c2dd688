"""Diagonal linear part and the operator calculus built on it.

For ``A = diag(lambda_1, ..., lambda_n)`` the Lie-derivative operator
``L_A f = Df.Ax - Af`` acts diagonally on monomial fields:

    L_A(x^q e_i) = (<lambda, q> - lambda_i) x^q e_i

so the kernel (resonant monomials) and the image (everything else) split
every polynomial field monomial by monomial.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .polyvec import DimensionError, GaussianRational, PolyVF, ZERO, format_rational


class ResonantInput(ValueError):
    """``pseudo_inverse_Q`` was handed a field with a resonant monomial."""


class NonDiagonalError(ValueError):
    """The linear part is not diagonal."""


class NumericResonanceWarning(UserWarning):
    """Resonance decided with a floating-point tolerance."""


_NON_DIAGONAL_HINT = (
    "the linear part must be diagonal. For a non-semisimple matrix, bring it to "
    "Jordan form A = Lambda + N (Lambda diagonal, N nilpotent), rescale so that "
    "A = Lambda + eps*N, and move N x into the first-order perturbation "
    "(g_1(x) -> g_1(x) + N x). Then pass Lambda as the linear part."
)


class DiagLinearPart:
    """The diagonal matrix ``A`` stored as its eigenvalue list.

    In exact mode the eigenvalues are :class:`GaussianRational` and the
    resonance test has no tolerance.  Numeric mode (see :meth:`numeric`)
    stores complex floats and a tolerance ``tol``; it supports
    classification and projection but not the exact operators.
    """

    def __init__(self, eigenvalues: Sequence, *, _numeric: bool = False, tol: float | None = None):
        if len(eigenvalues) == 0:
            raise ValueError("need at least one eigenvalue")
        self.exact = not _numeric
        if self.exact:
            self.eigenvalues = tuple(GaussianRational.coerce(v) for v in eigenvalues)
            self.tol = None
        else:
            self.eigenvalues = tuple(complex(v) for v in eigenvalues)
            scale = max(1.0, max(abs(v) for v in self.eigenvalues))
            self.tol = float(tol) if tol is not None else 1e-12 * scale
            if self.tol <= 0:
                raise ValueError("numeric resonance tolerance must be positive")

    @classmethod
    def numeric(cls, eigenvalues: Sequence[complex], tol: float | None = None) -> "DiagLinearPart":
        """Float eigenvalues with resonance tolerance (default ``1e-12 max|lambda|``)."""
        return cls(eigenvalues, _numeric=True, tol=tol)

    @classmethod
    def from_matrix(cls, matrix) -> "DiagLinearPart":
        """Accept a square exact matrix; reject it unless it is diagonal."""
        n = len(matrix)
        for i, row in enumerate(matrix):
            if len(row) != n:
                raise NonDiagonalError("matrix is not square")
            for j, v in enumerate(row):
                if i != j and GaussianRational.coerce(v):
                    raise NonDiagonalError(f"entry ({i + 1},{j + 1}) is nonzero: {_NON_DIAGONAL_HINT}")
        return cls([matrix[i][i] for i in range(n)])

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)

    @property
    def lam(self) -> np.ndarray:
        """Eigenvalues as a complex float array."""
        return np.array([complex(v) for v in self.eigenvalues], dtype=np.complex128)

    @property
    def purely_imaginary(self) -> bool:
        if self.exact:
            return all(not v.re for v in self.eigenvalues)
        return all(abs(v.real) <= self.tol for v in self.eigenvalues)

    def factor(self, comp: int, exp: Sequence[int]):
        """Eigenfactor ``<lambda, q> - lambda_i`` of the monomial ``x^q e_i``."""
        lam = self.eigenvalues
        if self.exact:
            re = -lam[comp].re
            im = -lam[comp].im
            for v, qj in zip(lam, exp):
                if qj:
                    re += v.re * qj
                    im += v.im * qj
            return GaussianRational._raw(re, im)
        return sum(v * qj for v, qj in zip(lam, exp)) - lam[comp]

    def is_resonant(self, comp: int, exp: Sequence[int]) -> bool:
        f = self.factor(comp, exp)
        if self.exact:
            return not f
        return abs(f) <= self.tol

    def matrix_exp(self, s: float) -> np.ndarray:
        """``diag(exp(lambda_j s))`` as a vector."""
        return np.exp(self.lam * s)

    def __eq__(self, other):
        return isinstance(other, DiagLinearPart) and self.eigenvalues == other.eigenvalues \
            and self.exact == other.exact and self.tol == other.tol

    def __repr__(self):
        mode = "exact" if self.exact else f"numeric, tol={self.tol:g}"
        return f"DiagLinearPart({[str(v) for v in self.eigenvalues]}, {mode})"


@dataclass(frozen=True)
class ResonanceClass:
    comp: int
    exp: tuple
    factor: object
    resonant: bool

    def to_dict(self) -> dict:
        f = self.factor
        if isinstance(f, GaussianRational):
            fre, fim = format_rational(f.re), format_rational(f.im)
        else:
            fre, fim = float(np.real(f)), float(np.imag(f))
        return {"comp": self.comp + 1, "exp": list(self.exp), "factor_re": fre,
                "factor_im": fim, "resonant": self.resonant}


def _check(A: DiagLinearPart, f: PolyVF):
    if A.dim != f.dim:
        raise DimensionError(f"linear part has dim {A.dim}, field has dim {f.dim}")


def _require_exact(A: DiagLinearPart, what: str):
    if not A.exact:
        raise ValueError(f"{what} needs exact eigenvalues; numeric mode only classifies and projects")


def _warn_numeric(A: DiagLinearPart):
    if not A.exact:
        warnings.warn(f"resonance decided numerically with tolerance {A.tol:g}",
                      NumericResonanceWarning, stacklevel=3)


def lie_derivative(A: DiagLinearPart, f: PolyVF) -> PolyVF:
    """``L_A f = Df.Ax - Af``, i.e. each monomial times its eigenfactor."""
    _check(A, f)
    _require_exact(A, "lie_derivative")
    terms = {}
    for (i, q), c in f.terms.items():
        fac = A.factor(i, q)
        if fac:
            terms[(i, q)] = c * fac
    return PolyVF._make(f.dim, terms, f.max_degree)


def classify(A: DiagLinearPart, f: PolyVF) -> list:
    """One :class:`ResonanceClass` per stored monomial, in canonical order."""
    _check(A, f)
    _warn_numeric(A)
    out = []
    for (i, q), _ in f.items():
        fac = A.factor(i, q)
        res = (not fac) if A.exact else abs(fac) <= A.tol
        out.append(ResonanceClass(i, q, fac, res))
    return out


def resonance_report(A: DiagLinearPart, f: PolyVF) -> list:
    """JSON-ready list of ``{comp, exp, factor_re, factor_im, resonant}``."""
    return [rc.to_dict() for rc in classify(A, f)]


def _split(A: DiagLinearPart, f: PolyVF, keep_resonant: bool) -> PolyVF:
    _check(A, f)
    terms = {k: v for k, v in f.terms.items() if A.is_resonant(*k) == keep_resonant}
    return PolyVF._make(f.dim, terms, f.max_degree)


def project_K(A: DiagLinearPart, f: PolyVF) -> PolyVF:
    """Resonant part (kernel of ``L_A``)."""
    return _split(A, f, True)


def project_I(A: DiagLinearPart, f: PolyVF) -> PolyVF:
    """Non-resonant part (image of ``L_A``)."""
    return _split(A, f, False)


def in_kernel(A: DiagLinearPart, f: PolyVF) -> bool:
    """``f`` is equivariant under the linear flow iff its non-resonant part vanishes."""
    return project_I(A, f).is_zero


def in_image(A: DiagLinearPart, f: PolyVF) -> bool:
    return project_K(A, f).is_zero


def pseudo_inverse_Q(A: DiagLinearPart, g: PolyVF) -> PolyVF:
    """Solve ``L_A F = g`` with ``P_K F = 0`` by dividing monomials by eigenfactors.

    Raises
    ------
    ResonantInput
        If ``g`` has a resonant monomial; project with :func:`project_I` first.
    """
    _check(A, g)
    _require_exact(A, "pseudo_inverse_Q")
    terms = {}
    for (i, q), c in g.terms.items():
        fac = A.factor(i, q)
        if not fac:
            raise ResonantInput(f"monomial x^{q} e{i + 1} is resonant; apply project_I before Q")
        terms[(i, q)] = c * fac.reciprocal()
    return PolyVF._make(g.dim, terms, g.max_degree)


def resonant_monomials(A: DiagLinearPart, max_degree: int, min_degree: int = 1) -> list:
    """All resonant ``(comp, exp)`` keys with degree in ``[min_degree, max_degree]``."""
    out = []
    for d in range(min_degree, max_degree + 1):
        for exp in exponents_of_degree(A.dim, d):
            for i in range(A.dim):
                if A.is_resonant(i, exp):
                    out.append((i, exp))
    return out


def exponents_of_degree(n: int, d: int):
    """All length-``n`` exponent tuples of total degree ``d`` (graded-lex order)."""
    if n == 1:
        yield (d,)
        return
    for first in range(d, -1, -1):
        for rest in exponents_of_degree(n - 1, d - first):
            yield (first,) + rest


def flow_conjugate_poly(A: DiagLinearPart, f: PolyVF, s: float, x) -> np.ndarray:
    """Numeric ``exp(-As) f(exp(As) x)`` for a polynomial field."""
    E = A.matrix_exp(s)
    x = np.asarray(x, dtype=np.complex128)
    return f(E * x) / E


__all__ = [
    "DiagLinearPart", "ResonanceClass", "ResonantInput", "NonDiagonalError", "NumericResonanceWarning",
    "lie_derivative", "classify", "resonance_report", "project_K", "project_I", "pseudo_inverse_Q",
    "in_kernel", "in_image", "resonant_monomials", "exponents_of_degree", "flow_conjugate_poly", "ZERO",
]
