"""Renormalization-group normal forms for ``x' = Ax + sum_k eps^k g_k(x)``.

Pipeline (exact, over Gaussian rationals):

1. ``R_1 = g_1``; for ``k >= 2``
   ``R_k = G_k(y, h_1, ..., h_{k-1}) - sum_{j<k} Dh_j . P_K(R_{k-j})``
   with ``h_j = Q P_I(R_j)`` and ``G_k`` the ``eps^k`` coefficient of
   ``sum_j eps^j g_j(sum_l eps^l x_l)``.
2. Normal form ``z' = Az + sum_k eps^k P_K(R_k)(z)``.
3. Near-identity transform ``x = z + sum_k eps^k h_k(z)``.
4. Secular table ``p^(i)_j`` giving the regular perturbation solution
   ``x_i(t, y) = h_i(e^{At} y) + sum_j p^(i)_j(e^{At} y) t^j``.

``eps`` is symbolic throughout; numbers enter only in the evaluators.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import polyvec as pv
from .polyvec import DimensionError, GaussianRational, PolyVF
from .spectra import DiagLinearPart, lie_derivative, project_I, project_K, pseudo_inverse_Q

DEFAULT_MAX_ORDER = 6


class InversionDiverged(RuntimeError):
    """Fixed-point inversion of the near-identity transform did not converge."""

    def __init__(self, x, eps, iterations, step):
        self.x = np.asarray(x)
        self.eps = eps
        self.iterations = iterations
        self.step = step
        super().__init__(
            f"near-identity inversion diverged at x={self.x.tolist()}, eps={eps} "
            f"(last step {step:.3e} after {iterations} iterations)"
        )


class OrderError(ValueError):
    """Requested order outside the available range."""


@dataclass(frozen=True)
class PerturbationSeries:
    """``x' = Ax + eps g_1(x) + eps^2 g_2(x) + ...`` truncated at ``m_max``.

    ``g[k-1]`` holds ``g_k``; missing orders are zero fields.
    """

    A: DiagLinearPart
    g: tuple
    m_max: int = DEFAULT_MAX_ORDER

    def __init__(self, A: DiagLinearPart, g: Sequence[PolyVF], m_max: int = DEFAULT_MAX_ORDER):
        g = tuple(g)
        if m_max < 1:
            raise OrderError("m_max must be at least 1")
        if len(g) > m_max:
            raise OrderError(f"{len(g)} perturbation orders given but m_max={m_max}")
        for k, gk in enumerate(g, start=1):
            if gk.dim != A.dim:
                raise DimensionError(f"g_{k} has dim {gk.dim}, linear part has dim {A.dim}")
            if not gk.constant_free:
                raise ValueError(f"g_{k} does not vanish at the origin")
        g = g + tuple(PolyVF.zero(A.dim) for _ in range(m_max - len(g)))
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "m_max", m_max)

    @property
    def dim(self) -> int:
        return self.A.dim

    def gk(self, k: int) -> PolyVF:
        if not 1 <= k <= self.m_max:
            raise OrderError(f"order {k} outside 1..{self.m_max}")
        return self.g[k - 1]

    def field(self, eps: float):
        """Numeric right-hand side ``x -> Ax + sum eps^k g_k(x)``."""
        lam = self.A.lam
        terms = [(eps ** k, gk) for k, gk in enumerate(self.g, start=1) if not gk.is_zero]

        def rhs(t, x):
            x = np.asarray(x, dtype=np.complex128)
            out = lam * x
            for w, gk in terms:
                out = out + w * gk(x)
            return out

        return rhs

    def combined(self, eps) -> PolyVF:
        """``sum_k eps^k g_k`` for an exact numeric ``eps``."""
        e = GaussianRational.coerce(eps)
        out = PolyVF.zero(self.dim)
        w = pv.ONE
        for gk in self.g:
            w = w * e
            out = out + pv.scale(gk, w)
        return out


def extract_Gk(ps: PerturbationSeries, substitutions: Sequence[PolyVF], k: int,
               max_degree: int | None = None) -> PolyVF:
    """``eps^k`` coefficient of ``sum_j eps^j g_j(x_0 + eps x_1 + ...)``.

    ``substitutions`` is ``[x_0, x_1, ..., x_{k-1}]``; ``x_0`` is the
    base point (the identity field when building ``R_k``).
    """
    if not 1 <= k <= ps.m_max:
        raise OrderError(f"order {k} outside 1..{ps.m_max}")
    if len(substitutions) < k:
        raise ValueError(f"G_{k} needs x_0..x_{k - 1} ({k} entries), got {len(substitutions)}")
    series = list(substitutions[:k])
    total = PolyVF.zero(ps.dim)
    for j in range(1, k + 1):
        gj = ps.gk(j)
        if gj.is_zero:
            continue
        coeffs = pv.substitute(gj, series, order=k - j, max_degree=max_degree)
        total = total + coeffs[k - j]
    if max_degree is not None:
        total = pv.truncate(total, max_degree)
    return total


@dataclass
class NormalFormResult:
    """Output of :func:`compute_Rk`.

    Attributes
    ----------
    order : int
        Number of computed orders ``m``.
    A : DiagLinearPart
    Rk, PK_Rk, QPI_Rk : list of PolyVF
        ``R_k``, ``P_K(R_k)`` and ``Q P_I(R_k)`` for ``k = 1..m`` (index ``k-1``).
    secular : dict
        ``{(i, j): p^(i)_j}`` for ``1 <= j <= i <= m``.
    max_degree : int or None
        Polynomial truncation applied during the computation.
    """

    order: int
    A: DiagLinearPart
    Rk: list
    PK_Rk: list
    QPI_Rk: list
    secular: dict = field(default_factory=dict)
    max_degree: int | None = None
    series: PerturbationSeries | None = None

    @property
    def dim(self) -> int:
        return self.A.dim

    def p(self, i: int, j: int) -> PolyVF:
        """Secular coefficient ``p^(i)_j`` (zero for ``j > i``)."""
        if j > i:
            return PolyVF.zero(self.dim)
        try:
            return self.secular[(i, j)]
        except KeyError:
            raise OrderError(f"p^({i})_{j} not computed (order {self.order})") from None

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "eigenvalues": [[pv.format_rational(v.re), pv.format_rational(v.im)] for v in self.A.eigenvalues],
            "max_degree": self.max_degree,
            "normal_form": [f.to_dict() for f in self.PK_Rk],
            "near_identity": [f.to_dict() for f in self.QPI_Rk],
            "R": [f.to_dict() for f in self.Rk],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def compute_Rk(ps: PerturbationSeries, m: int, max_degree: int | None = None,
               with_secular: bool = True) -> NormalFormResult:
    """Run the ``R_k`` recursion to order ``m``.

    ``max_degree`` truncates every intermediate polynomial.  For fields
    vanishing at the origin all operations here are degree non-decreasing,
    so the truncated result equals the truncation of the exact result.
    """
    if not 1 <= m <= ps.m_max:
        raise OrderError(f"order {m} outside 1..{ps.m_max}")
    if not ps.A.exact:
        raise ValueError("the exact engine needs exact eigenvalues")
    A = ps.A
    ident = PolyVF.identity(ps.dim)
    Rk, PK, QPI = [], [], []
    for k in range(1, m + 1):
        if k == 1:
            R = ps.gk(1)
            if max_degree is not None:
                R = pv.truncate(R, max_degree)
        else:
            R = extract_Gk(ps, [ident] + QPI, k, max_degree=max_degree)
            for j in range(1, k):
                R = R - pv.jacobian_apply(QPI[j - 1], PK[k - j - 1], max_degree=max_degree)
        Rk.append(R)
        PK.append(project_K(A, R))
        QPI.append(pseudo_inverse_Q(A, project_I(A, R)))
    nf = NormalFormResult(order=m, A=A, Rk=Rk, PK_Rk=PK, QPI_Rk=QPI, max_degree=max_degree, series=ps)
    if with_secular:
        nf.secular = secular_table(nf)
    return nf


def secular_table(nf: NormalFormResult) -> dict:
    """Coefficients ``p^(i)_j`` of the secular terms, ``1 <= j <= i <= m``.

    ``p^(i)_1 = P_K(R_i) + sum_k Dh_k . P_K(R_{i-k})`` and, for ``j >= 2``,
    ``p^(i)_j = (1/j) sum_k D p^(k)_{j-1} . P_K(R_{i-k})`` where entries with
    ``j - 1 > k`` vanish and are skipped.
    """
    cap = nf.max_degree
    PK, QPI = nf.PK_Rk, nf.QPI_Rk
    table: dict = {}
    for i in range(1, nf.order + 1):
        p1 = PK[i - 1]
        for k in range(1, i):
            p1 = p1 + pv.jacobian_apply(QPI[k - 1], PK[i - k - 1], max_degree=cap)
        table[(i, 1)] = p1
        for j in range(2, i + 1):
            acc = PolyVF.zero(nf.dim)
            for k in range(j - 1, i):
                acc = acc + pv.jacobian_apply(table[(k, j - 1)], PK[i - k - 1], max_degree=cap)
            table[(i, j)] = pv.scale(acc, GaussianRational(pv.Q(1, j)))
    return table


def normal_form(nf: NormalFormResult) -> list:
    """``[P_K(R_1), ..., P_K(R_m)]``: the eps-graded normal form beyond ``Az``."""
    return list(nf.PK_Rk)


def normal_form_field(nf: NormalFormResult, eps: float, order: int | None = None):
    """Numeric ``z -> Az + sum_{k<=order} eps^k P_K(R_k)(z)``."""
    order = nf.order if order is None else order
    lam = nf.A.lam
    terms = [(eps ** k, nf.PK_Rk[k - 1]) for k in range(1, order + 1) if not nf.PK_Rk[k - 1].is_zero]

    def rhs(t, z):
        z = np.asarray(z, dtype=np.complex128)
        out = lam * z
        for w, f in terms:
            out = out + w * f(z)
        return out

    return rhs


def truncated_normal_form_poly(nf: NormalFormResult, eps, order: int | None = None) -> PolyVF:
    """``sum_{k<=order} eps^k P_K(R_k)`` as one exact field (``eps`` exact)."""
    order = nf.order if order is None else order
    e = GaussianRational.coerce(eps)
    out = PolyVF.zero(nf.dim)
    w = pv.ONE
    for k in range(order):
        w = w * e
        out = out + pv.scale(nf.PK_Rk[k], w)
    return out


class NearIdentity:
    """``x = z + sum_k eps^k h_k(z)`` with numeric forward map and inverse."""

    def __init__(self, terms: Sequence[PolyVF]):
        self.terms = list(terms)
        self.dim = self.terms[0].dim if self.terms else None

    def __len__(self):
        return len(self.terms)

    def correction(self, z, eps: float, order: int | None = None):
        order = len(self.terms) if order is None else order
        z = np.asarray(z, dtype=np.complex128)
        out = np.zeros_like(z)
        for k in range(1, order + 1):
            h = self.terms[k - 1]
            if not h.is_zero:
                out = out + eps ** k * h(z)
        return out

    def forward(self, z, eps: float, order: int | None = None):
        z = np.asarray(z, dtype=np.complex128)
        return z + self.correction(z, eps, order)

    __call__ = forward

    def inverse(self, x, eps: float, order: int | None = None, tol: float = 1e-13,
                max_iter: int = 100, damping: float = 1.0):
        """Solve ``forward(z) = x`` by fixed-point iteration from ``z = x``.

        ``z <- (1 - damping) z + damping (x - correction(z))``; stops when the
        step is below ``tol * max(1, |x|)``.
        """
        x = np.asarray(x, dtype=np.complex128)
        z = x.copy()
        scale_ = max(1.0, float(np.max(np.abs(x))) if x.size else 1.0)
        step = np.inf
        for it in range(1, max_iter + 1):
            with np.errstate(over="ignore", invalid="ignore"):
                z_new = (1.0 - damping) * z + damping * (x - self.correction(z, eps, order))
            if not np.all(np.isfinite(z_new)):
                raise InversionDiverged(x, eps, it, np.inf)
            step = float(np.max(np.abs(z_new - z)))
            z = z_new
            if step <= tol * scale_:
                return z
        raise InversionDiverged(x, eps, max_iter, step)

    def to_dict(self) -> dict:
        return {"near_identity": [h.to_dict() for h in self.terms]}


def near_identity(nf: NormalFormResult) -> NearIdentity:
    """The ``m``-th order near-identity transform ``[h_1, ..., h_m]``."""
    return NearIdentity(nf.QPI_Rk)


# ---------------------------------------------------------------------------
# regular perturbation solution and the hierarchy check

def lift_time(f: PolyVF) -> PolyVF:
    """Embed a field on ``C^n`` into ``C^{n+1}`` with a trailing time variable."""
    n = f.dim
    return PolyVF._make(n + 1, {(i, q + (0,)): c for (i, q), c in f.terms.items()})


@dataclass
class SecularSolution:
    """``x_i(t, y) = sum_j c_j(e^{At} y) t^j`` with ``c_0 = Q P_I(R_i)``, ``c_j = p^(i)_j``."""

    A: DiagLinearPart
    coeffs: list

    @property
    def order_in_t(self) -> int:
        return len(self.coeffs) - 1

    def evaluate(self, t: float, y):
        u = self.A.matrix_exp(t) * np.asarray(y, dtype=np.complex128)
        out = np.zeros_like(u)
        for j, c in enumerate(self.coeffs):
            if not c.is_zero:
                out = out + c(u) * t ** j
        return out

    def lifted(self) -> PolyVF:
        """The solution as one polynomial in ``(u_1..u_n, t)`` with ``u = e^{At} y``."""
        n = self.A.dim
        terms = {}
        for j, c in enumerate(self.coeffs):
            for (i, q), v in c.terms.items():
                terms[(i, q + (j,))] = v
        return PolyVF._make(n + 1, terms)


def perturbation_solution(nf: NormalFormResult, i: int) -> SecularSolution:
    """Order-``i`` term of the regular perturbation solution."""
    if not 1 <= i <= nf.order:
        raise OrderError(f"order {i} outside 1..{nf.order}")
    coeffs = [nf.QPI_Rk[i - 1]] + [nf.p(i, j) for j in range(1, i + 1)]
    return SecularSolution(nf.A, coeffs)


def _lifted_A(A: DiagLinearPart) -> DiagLinearPart:
    return DiagLinearPart(list(A.eigenvalues) + [0])


def _time_derivative(X: PolyVF) -> PolyVF:
    """Partial derivative in the trailing time variable of a lifted field."""
    terms = {}
    for (i, q), c in X.terms.items():
        a = q[-1]
        if a:
            terms[(i, q[:-1] + (a - 1,))] = c * a
    return PolyVF._make(X.dim, terms)


def hierarchy_residual(nf: NormalFormResult, i: int) -> PolyVF:
    """``d/dt x_i - A x_i - G_i(x_0, ..., x_{i-1})`` in lifted ``(u, t)`` variables.

    With ``u = e^{At} y`` we have ``du/dt = Au``, so for a lifted ``X(u, t)``
    ``dX/dt - AX = L_{A'} X + dX/dt|_u`` where ``A' = diag(lambda, 0)``.
    The result is exactly zero when the solution satisfies the hierarchy.
    """
    if nf.series is None:
        raise ValueError("result carries no perturbation series")
    ps = nf.series
    A1 = _lifted_A(nf.A)
    X = perturbation_solution(nf, i).lifted()
    lhs = lie_derivative(A1, X) + _time_derivative(X)
    lifted_ps = PerturbationSeries(A1, [lift_time(g) for g in ps.g], m_max=ps.m_max)
    subs = [PolyVF.identity(nf.dim + 1)] + [perturbation_solution(nf, k).lifted() for k in range(1, i)]
    rhs = extract_Gk(lifted_ps, subs, i)
    out = lhs - rhs
    if nf.max_degree is not None:
        # the time variable is not part of the truncation degree
        out = PolyVF._make(out.dim, {k: v for k, v in out.terms.items()
                                     if sum(k[1][:-1]) <= nf.max_degree})
    return out


# ---------------------------------------------------------------------------
# rendering

def render_text(nf: NormalFormResult, var: str = "z") -> str:
    lines = [f"normal form (order {nf.order}): {var}' = A {var} + sum_k eps^k P_K(R_k)({var})",
             "A = diag(" + ", ".join(str(v) for v in nf.A.eigenvalues) + ")"]
    for k, f in enumerate(nf.PK_Rk, start=1):
        lines.append(f"eps^{k}: {pv.to_text(f, var)}")
    lines.append(f"near-identity transform: x = {var} + sum_k eps^k h_k({var})")
    for k, h in enumerate(nf.QPI_Rk, start=1):
        lines.append(f"eps^{k}: {pv.to_text(h, var)}")
    return "\n".join(lines) + "\n"


def render_latex(nf: NormalFormResult, var: str = "z") -> str:
    lam = ", ".join(pv._latex_coeff(v) for v in nf.A.eigenvalues)
    nf_terms = " + ".join(rf"\varepsilon^{{{k}}} {pv.to_latex(f, var)}" for k, f in enumerate(nf.PK_Rk, 1))
    ni_terms = " + ".join(rf"\varepsilon^{{{k}}} {pv.to_latex(h, var)}" for k, h in enumerate(nf.QPI_Rk, 1))
    return (
        "% normal form and near-identity transform\n"
        r"\begin{align*}" "\n"
        rf"\dot{{{var}}} &= \mathrm{{diag}}({lam})\, {var} + {nf_terms or '0'} \\" "\n"
        rf"x &= {var} + {ni_terms or '0'}" "\n"
        r"\end{align*}" "\n"
    )


def polar_coefficients(f: PolyVF) -> list:
    """Coefficients of ``z1^{k+1} z2^k`` in component 1 of a 2-D field.

    For ``lambda = (i w, -i w)`` and ``z1 = r e^{i theta}``, ``z2 = conj(z1)``
    a resonant first component ``sum_k c_k z1^{k+1} z2^k`` gives
    ``r' = sum Re(c_k) r^{2k+1}`` and ``theta' - w = sum Im(c_k) r^{2k}``.
    """
    if f.dim != 2:
        raise DimensionError("polar coefficients need a 2-D field")
    comp = f.component(0)
    out = []
    k = 0
    top = f.degree
    while 2 * k + 1 <= top:
        out.append(comp.get((k + 1, k), pv.ZERO))
        k += 1
    return out
