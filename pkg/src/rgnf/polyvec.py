"""Exact polynomial vector fields over the Gaussian rationals.

A :class:`PolyVF` is a finite map ``(component, multi-index) -> coefficient``
where the coefficient is a :class:`GaussianRational`.  Components are
0-based in Python; the JSON serialization uses 1-based component numbers.

All objects are immutable after construction and every operation returns a
new object.
"""
from __future__ import annotations

import json
import re
from fractions import Fraction
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

try:  # gmpy2 rationals are an order of magnitude faster than Fraction
    from gmpy2 import mpq as Q

    _RATIONAL_TYPES: tuple = (type(Q(0)), Fraction)
except ImportError:  # pragma: no cover - exercised only without gmpy2
    Q = Fraction
    _RATIONAL_TYPES = (Fraction,)

MultiIndex = tuple  # tuple[int, ...] of non-negative exponents

_DECIMAL = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")
_RATIO = re.compile(r"^\s*([+-]?\d+)\s*(?:/\s*(\d+))?\s*$")


class DimensionError(ValueError):
    """Operands live in spaces of different dimension."""


def as_rational(value):
    """Convert ``value`` to the exact rational type ``Q``.

    Accepts ints, Fractions, mpq, ``"p/q"`` strings, decimal strings and
    floats.  Floats go through their shortest ``repr`` so that ``0.1``
    becomes ``1/10`` rather than the binary expansion.
    """
    if isinstance(value, bool):
        return Q(int(value))
    if isinstance(value, int):
        return Q(value)
    if isinstance(value, _RATIONAL_TYPES):
        return Q(value.numerator, value.denominator)
    if isinstance(value, float):
        if not np.isfinite(value):
            raise ValueError(f"non-finite value {value!r} has no rational form")
        value = repr(value)
    if isinstance(value, str):
        s = value.strip()
        m = _RATIO.match(s)
        if m:
            den = int(m.group(2)) if m.group(2) else 1
            if den == 0:
                raise ZeroDivisionError(f"zero denominator in {value!r}")
            return Q(int(m.group(1)), den)
        if _DECIMAL.match(s):
            f = Fraction(s)
            return Q(f.numerator, f.denominator)
        raise ValueError(f"cannot parse rational from {value!r}")
    raise TypeError(f"cannot convert {type(value).__name__} to a rational")


def format_rational(q) -> str:
    """Render as a decimal-free ``"p/q"`` string (``q`` always present)."""
    return f"{int(q.numerator)}/{int(q.denominator)}"


class GaussianRational:
    """Exact complex number ``re + i*im`` with rational parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        if isinstance(re, GaussianRational) and im == 0:
            self.re, self.im = re.re, re.im
            return
        if isinstance(re, complex):
            raise TypeError("complex floats are not exact; pass re and im separately")
        self.re = as_rational(re)
        self.im = as_rational(im)

    @classmethod
    def _raw(cls, re, im):
        obj = object.__new__(cls)
        obj.re = re
        obj.im = im
        return obj

    @classmethod
    def coerce(cls, value) -> "GaussianRational":
        if isinstance(value, GaussianRational):
            return value
        if isinstance(value, complex):
            return cls(as_rational(value.real), as_rational(value.imag))
        if isinstance(value, (tuple, list)) and len(value) == 2:
            return cls(value[0], value[1])
        return cls(value)

    @classmethod
    def parse(cls, re: str, im: str = "0/1") -> "GaussianRational":
        return cls(as_rational(re), as_rational(im))

    # arithmetic -----------------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, GaussianRational):
            try:
                other = GaussianRational.coerce(other)
            except (TypeError, ValueError):
                return NotImplemented
        return GaussianRational._raw(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, GaussianRational):
            try:
                other = GaussianRational.coerce(other)
            except (TypeError, ValueError):
                return NotImplemented
        return GaussianRational._raw(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return GaussianRational._raw(-self.re, -self.im)

    def __mul__(self, other):
        if isinstance(other, int):
            return GaussianRational._raw(self.re * other, self.im * other)
        if not isinstance(other, GaussianRational):
            try:
                other = GaussianRational.coerce(other)
            except (TypeError, ValueError):
                return NotImplemented
        a, b, c, d = self.re, self.im, other.re, other.im
        if not b and not d:
            return GaussianRational._raw(a * c, b)
        return GaussianRational._raw(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, GaussianRational):
            try:
                other = GaussianRational.coerce(other)
            except (TypeError, ValueError):
                return NotImplemented
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return GaussianRational.coerce(other) * self.reciprocal()

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.reciprocal() ** (-n)
        result, base = ONE, self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def reciprocal(self) -> "GaussianRational":
        norm = self.re * self.re + self.im * self.im
        if not norm:
            raise ZeroDivisionError("division by zero Gaussian rational")
        return GaussianRational._raw(self.re / norm, -self.im / norm)

    def conjugate(self) -> "GaussianRational":
        return GaussianRational._raw(self.re, -self.im)

    # comparison / conversion ---------------------------------------------
    def __eq__(self, other):
        if isinstance(other, GaussianRational):
            return self.re == other.re and self.im == other.im
        try:
            other = GaussianRational.coerce(other)
        except (TypeError, ValueError):
            return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"GaussianRational({format_rational(self.re)!r}, {format_rational(self.im)!r})"

    def __str__(self):
        re_s = _short(self.re)
        if not self.im:
            return re_s
        im_s = _short(abs(self.im))
        unit = "i" if im_s == "1" else f"{im_s}*i"
        if not self.re:
            return unit if self.im > 0 else f"-{unit}"
        sign = "+" if self.im > 0 else "-"
        return f"({re_s}{sign}{unit})"

    @property
    def is_real(self) -> bool:
        return not self.im


def _short(q) -> str:
    return str(int(q.numerator)) if q.denominator == 1 else f"{int(q.numerator)}/{int(q.denominator)}"


ZERO = GaussianRational._raw(Q(0), Q(0))
ONE = GaussianRational._raw(Q(1), Q(0))
I = GaussianRational._raw(Q(0), Q(1))


def degree(q: Sequence[int]) -> int:
    return sum(q)


def _canon_key(key) -> tuple:
    comp, exp = key
    return (sum(exp), exp, comp)


class PolyVF:
    """Polynomial vector field with exact Gaussian-rational coefficients.

    Parameters
    ----------
    dim : int
        Ambient dimension ``n`` (number of variables and of components).
    terms : mapping, optional
        ``{(comp, exp): coeff}`` with ``comp`` in ``0..n-1`` and ``exp`` a
        length-``n`` tuple of non-negative ints.  Coefficients may be anything
        :meth:`GaussianRational.coerce` accepts.  Zero entries are dropped.
    max_degree : int, optional
        Truncation degree; terms above it are discarded here and in the
        results of binary operations involving this field.
    constant_free : bool
        Reject degree-zero terms (fields vanishing at the origin).
    """

    __slots__ = ("dim", "_terms", "max_degree", "_packed", "_by_comp")

    def __init__(self, dim: int, terms: Mapping | None = None, max_degree: int | None = None,
                 constant_free: bool = False):
        if not isinstance(dim, (int, np.integer)) or dim < 1:
            raise ValueError(f"dim must be a positive integer, got {dim!r}")
        dim = int(dim)
        clean: dict = {}
        for key, coeff in (terms or {}).items():
            comp, exp = key
            comp = int(comp)
            exp = tuple(int(e) for e in exp)
            if not 0 <= comp < dim:
                raise DimensionError(f"component {comp} out of range for dim {dim}")
            if len(exp) != dim:
                raise DimensionError(f"exponent {exp} has length {len(exp)}, expected {dim}")
            if any(e < 0 for e in exp):
                raise ValueError(f"negative exponent in {exp}")
            if max_degree is not None and sum(exp) > max_degree:
                continue
            c = GaussianRational.coerce(coeff)
            prev = clean.get((comp, exp))
            c = c if prev is None else prev + c
            if c:
                clean[(comp, exp)] = c
            else:
                clean.pop((comp, exp), None)
        if constant_free and any(sum(e) == 0 for _, e in clean):
            raise ValueError("constant term present in a field declared constant-free")
        self._init(dim, clean, max_degree)

    def _init(self, dim, terms, max_degree):
        self.dim = dim
        self._terms = terms
        self.max_degree = max_degree
        self._packed = None
        self._by_comp = None

    @classmethod
    def _make(cls, dim: int, terms: dict, max_degree: int | None = None) -> "PolyVF":
        """Build from an already-canonical dict (no zeros, right shapes)."""
        obj = object.__new__(cls)
        if max_degree is not None:
            terms = {k: v for k, v in terms.items() if sum(k[1]) <= max_degree}
        obj._init(dim, terms, max_degree)
        return obj

    # constructors ---------------------------------------------------------
    @classmethod
    def zero(cls, dim: int) -> "PolyVF":
        return cls._make(dim, {})

    @classmethod
    def identity(cls, dim: int) -> "PolyVF":
        """The field ``x -> x``; the base entry of every substitution series."""
        return cls._make(dim, {(i, _unit(dim, i)): ONE for i in range(dim)})

    @classmethod
    def monomial(cls, dim: int, comp: int, exp: Sequence[int], coeff=1) -> "PolyVF":
        return cls(dim, {(comp, tuple(exp)): coeff})

    @classmethod
    def linear(cls, matrix) -> "PolyVF":
        """The field ``x -> B x`` for a square matrix of exact entries."""
        n = len(matrix)
        terms = {}
        for i, row in enumerate(matrix):
            if len(row) != n:
                raise DimensionError("linear part must be square")
            for j, b in enumerate(row):
                terms[(i, _unit(n, j))] = b
        return cls(n, terms)

    # read access ----------------------------------------------------------
    @property
    def terms(self) -> Mapping:
        return MappingProxyType(self._terms)

    def items(self) -> list:
        """Terms in canonical graded-lex order."""
        return sorted(self._terms.items(), key=lambda kv: _canon_key(kv[0]))

    def __len__(self):
        return len(self._terms)

    def __iter__(self):
        return iter(self.items())

    def coeff(self, comp: int, exp: Sequence[int]) -> GaussianRational:
        return self._terms.get((comp, tuple(exp)), ZERO)

    @property
    def is_zero(self) -> bool:
        return not self._terms

    @property
    def degree(self) -> int:
        """Largest monomial degree (-1 for the zero field)."""
        return max((sum(e) for _, e in self._terms), default=-1)

    @property
    def min_degree(self) -> int:
        return min((sum(e) for _, e in self._terms), default=-1)

    @property
    def constant_free(self) -> bool:
        return all(sum(e) > 0 for _, e in self._terms)

    def is_homogeneous(self, d: int | None = None) -> bool:
        degs = {sum(e) for _, e in self._terms}
        if d is None:
            return len(degs) <= 1
        return degs <= {d}

    def component(self, comp: int) -> dict:
        """Scalar polynomial ``{exp: coeff}`` of one component."""
        if self._by_comp is None:
            by: list = [dict() for _ in range(self.dim)]
            for (c, e), v in self._terms.items():
                by[c][e] = v
            self._by_comp = by
        return self._by_comp[comp]

    # algebra --------------------------------------------------------------
    def __eq__(self, other):
        if not isinstance(other, PolyVF):
            return NotImplemented
        return self.dim == other.dim and self._terms == other._terms

    def __hash__(self):
        return hash((self.dim, frozenset(self._terms.items())))

    def __add__(self, other):
        if not isinstance(other, PolyVF):
            return NotImplemented
        return add(self, other)

    def __sub__(self, other):
        if not isinstance(other, PolyVF):
            return NotImplemented
        return add(self, scale(other, -1))

    def __neg__(self):
        return scale(self, -1)

    def __mul__(self, c):
        return scale(self, c)

    __rmul__ = __mul__

    def __repr__(self):
        return f"PolyVF(dim={self.dim}, {to_text(self)})"

    # numeric evaluation ---------------------------------------------------
    def pack(self):
        """Flat arrays ``(comps, exps, coeffs)`` for the numeric kernels."""
        if self._packed is None:
            items = self.items()
            comps = np.array([c for (c, _), _ in items], dtype=np.int64)
            exps = np.array([e for (_, e), _ in items], dtype=np.int64).reshape(len(items), self.dim)
            coeffs = np.array([complex(v) for _, v in items], dtype=np.complex128)
            self._packed = (comps, exps, coeffs)
        return self._packed

    def __call__(self, x):
        """Evaluate at a point ``(n,)`` or a batch ``(n, P)`` of complex points."""
        from .kernels import poly_eval, poly_eval_batch

        x = np.asarray(x, dtype=np.complex128)
        comps, exps, coeffs = self.pack()
        if x.shape[0] != self.dim:
            raise DimensionError(f"point has {x.shape[0]} coordinates, field dim is {self.dim}")
        if x.ndim == 1:
            return poly_eval(comps, exps, coeffs, x, self.dim)
        flat = x.reshape(self.dim, -1)
        out = poly_eval_batch(comps, exps, coeffs, np.ascontiguousarray(flat), self.dim)
        return out.reshape(x.shape)

    evaluate = __call__

    # serialization --------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "terms": [
                {"comp": c + 1, "exp": list(e), "re": format_rational(v.re), "im": format_rational(v.im)}
                for (c, e), v in self.items()
            ],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, data: Mapping) -> "PolyVF":
        dim = int(data["dim"])
        terms = {}
        for t in data["terms"]:
            key = (int(t["comp"]) - 1, tuple(t["exp"]))
            if key in terms:
                raise ValueError(f"duplicate term {key}")
            terms[key] = GaussianRational.parse(t["re"], t.get("im", "0/1"))
        return cls(dim, terms)

    @classmethod
    def from_json(cls, text: str) -> "PolyVF":
        return cls.from_dict(json.loads(text))


def _unit(n: int, j: int) -> tuple:
    return tuple(1 if k == j else 0 for k in range(n))


def _check_dims(*fields: PolyVF) -> int:
    dims = {f.dim for f in fields}
    if len(dims) != 1:
        raise DimensionError(f"dimension mismatch: {sorted(dims)}")
    return dims.pop()


def _cap(*fields: PolyVF):
    caps = [f.max_degree for f in fields if f.max_degree is not None]
    return min(caps) if caps else None


def _finish(dim: int, acc: dict, max_degree) -> PolyVF:
    terms = {}
    for key, (re_, im_) in acc.items():
        if re_ or im_:
            terms[key] = GaussianRational._raw(re_, im_)
    return PolyVF._make(dim, terms, max_degree)


def add(f: PolyVF, g: PolyVF) -> PolyVF:
    """Coefficient-wise sum."""
    dim = _check_dims(f, g)
    terms = dict(f._terms)
    for key, v in g._terms.items():
        prev = terms.get(key)
        if prev is None:
            terms[key] = v
        else:
            s = prev + v
            if s:
                terms[key] = s
            else:
                del terms[key]
    return PolyVF._make(dim, terms, _cap(f, g))


def add_all(fields: Iterable[PolyVF], dim: int | None = None) -> PolyVF:
    fields = list(fields)
    if not fields:
        if dim is None:
            raise ValueError("add_all of an empty list needs dim")
        return PolyVF.zero(dim)
    out = fields[0]
    for f in fields[1:]:
        out = add(out, f)
    return out


def scale(f: PolyVF, c) -> PolyVF:
    c = GaussianRational.coerce(c)
    if not c:
        return PolyVF._make(f.dim, {}, f.max_degree)
    return PolyVF._make(f.dim, {k: v * c for k, v in f._terms.items()}, f.max_degree)


def truncate(f: PolyVF, d: int) -> PolyVF:
    """Drop all terms of degree greater than ``d``."""
    if d < 0:
        raise ValueError("truncation degree must be non-negative")
    return PolyVF._make(f.dim, {k: v for k, v in f._terms.items() if sum(k[1]) <= d}, f.max_degree)


def homogeneous_part(f: PolyVF, d: int) -> PolyVF:
    return PolyVF._make(f.dim, {k: v for k, v in f._terms.items() if sum(k[1]) == d}, f.max_degree)


def jacobian_apply(f: PolyVF, g: PolyVF, max_degree: int | None = None) -> PolyVF:
    """Return ``Df(x) . g(x)`` expanded in canonical form.

    The result has degree at most ``deg f + deg g - 1``.
    """
    dim = _check_dims(f, g)
    cap = _cap(f, g)
    if max_degree is not None:
        cap = max_degree if cap is None else min(cap, max_degree)
    g_by = [g.component(j) for j in range(dim)]
    acc: dict = {}
    for (i, q), c in f._terms.items():
        cre, cim = c.re, c.im
        for j in range(dim):
            qj = q[j]
            if not qj or not g_by[j]:
                continue
            dq = q[:j] + (qj - 1,) + q[j + 1:]
            dre, dim_ = cre * qj, cim * qj
            base_deg = sum(dq)
            for r, d in g_by[j].items():
                if cap is not None and base_deg + sum(r) > cap:
                    continue
                key = (i, tuple(a + b for a, b in zip(dq, r)))
                pre = dre * d.re - dim_ * d.im
                pim = dre * d.im + dim_ * d.re
                slot = acc.get(key)
                if slot is None:
                    acc[key] = [pre, pim]
                else:
                    slot[0] += pre
                    slot[1] += pim
    return _finish(dim, acc, cap)


def lie_bracket(f: PolyVF, g: PolyVF) -> PolyVF:
    """Commutator ``[f, g] = Df.g - Dg.f``."""
    _check_dims(f, g)
    return add(jacobian_apply(f, g), scale(jacobian_apply(g, f), -1))


def second_derivative_apply(f: PolyVF, u: PolyVF, v: PolyVF) -> PolyVF:
    """Bilinear ``D^2 f(x)[u(x), v(x)]``.

    Uses ``D(Df.u).v = D^2f[u, v] + Df.(Du.v)``.
    """
    return add(jacobian_apply(jacobian_apply(f, u), v), scale(jacobian_apply(f, jacobian_apply(u, v)), -1))


# ---------------------------------------------------------------------------
# scalar polynomials and epsilon series (used by substitute)

def _spoly_mul(a: dict, b: dict, cap) -> dict:
    acc: dict = {}
    for ea, ca in a.items():
        da = sum(ea)
        for eb, cb in b.items():
            if cap is not None and da + sum(eb) > cap:
                continue
            key = tuple(x + y for x, y in zip(ea, eb))
            pre = ca.re * cb.re - ca.im * cb.im
            pim = ca.re * cb.im + ca.im * cb.re
            slot = acc.get(key)
            if slot is None:
                acc[key] = [pre, pim]
            else:
                slot[0] += pre
                slot[1] += pim
    return {k: GaussianRational._raw(r, i) for k, (r, i) in acc.items() if r or i}


def _spoly_add(a: dict, b: dict) -> dict:
    out = dict(a)
    for k, v in b.items():
        prev = out.get(k)
        if prev is None:
            out[k] = v
        else:
            s = prev + v
            if s:
                out[k] = s
            else:
                del out[k]
    return out


def _eps_mul(a: list, b: list, order: int, cap) -> list:
    out = [dict() for _ in range(order + 1)]
    for i, ai in enumerate(a):
        if not ai:
            continue
        for j, bj in enumerate(b):
            if i + j > order:
                break
            if bj:
                out[i + j] = _spoly_add(out[i + j], _spoly_mul(ai, bj, cap))
    return out


def substitute(f: PolyVF, series: Sequence[PolyVF], order: int | None = None,
               max_degree: int | None = None) -> list:
    """Expand ``f(s_0 + eps s_1 + eps^2 s_2 + ...)`` in powers of ``eps``.

    Parameters
    ----------
    f : PolyVF
        Field to evaluate on the formal series.
    series : sequence of PolyVF
        ``[s_0, s_1, ...]``; ``s_0`` is normally the identity field.
    order : int
        Truncation order in ``eps`` (required; no silent infinite expansion).
    max_degree : int, optional
        Additionally drop polynomial terms above this degree.

    Returns
    -------
    list of PolyVF
        ``[c_0, ..., c_order]`` with ``c_k`` the coefficient of ``eps^k``.
    """
    if order is None:
        raise TypeError("substitute requires an explicit truncation order")
    if order < 0:
        raise ValueError("order must be non-negative")
    if not series:
        raise ValueError("series needs at least the base entry s_0")
    dim = _check_dims(f, *series)
    cap = max_degree
    if cap is None:
        cap = _cap(f, *series)
    # X_j(eps) = sum_l eps^l s_l[j]
    var_series = []
    for j in range(dim):
        sj = [dict(s.component(j)) if l <= order else {} for l, s in enumerate(series)]
        sj = (sj + [dict() for _ in range(order + 1)])[: order + 1]
        var_series.append(sj)
    powers: list = [{0: [{(0,) * dim: ONE}] + [dict() for _ in range(order)]} for _ in range(dim)]

    def power(j: int, p: int) -> list:
        cache = powers[j]
        if p not in cache:
            cache[p] = _eps_mul(power(j, p - 1), var_series[j], order, cap)
        return cache[p]

    out = [dict() for _ in range(order + 1)]
    # group terms by exponent to reuse monomial expansions across components
    by_exp: dict = {}
    for (i, q), c in f._terms.items():
        by_exp.setdefault(q, []).append((i, c))
    for q, entries in sorted(by_exp.items(), key=lambda kv: (sum(kv[0]), kv[0])):
        mono = [{(0,) * dim: ONE}] + [dict() for _ in range(order)]
        for j, qj in enumerate(q):
            if qj:
                mono = _eps_mul(mono, power(j, qj), order, cap)
        for k, poly in enumerate(mono):
            if not poly:
                continue
            for i, c in entries:
                bucket = out[k]
                for e, v in poly.items():
                    key = (i, e)
                    prod = v * c
                    prev = bucket.get(key)
                    if prev is None:
                        bucket[key] = prod
                    else:
                        s = prev + prod
                        if s:
                            bucket[key] = s
                        else:
                            del bucket[key]
    return [PolyVF._make(dim, {k: v for k, v in b.items() if v}, cap) for b in out]


# ---------------------------------------------------------------------------
# rendering

def _mono_text(exp, var: str) -> str:
    parts = []
    for j, e in enumerate(exp):
        if e == 1:
            parts.append(f"{var}{j + 1}")
        elif e > 1:
            parts.append(f"{var}{j + 1}^{e}")
    return "*".join(parts) if parts else "1"


def to_text(f: PolyVF, var: str = "x") -> str:
    if f.is_zero:
        return "0"
    comps = []
    for i in range(f.dim):
        terms = sorted(f.component(i).items(), key=lambda kv: (sum(kv[0]), kv[0]))
        if not terms:
            continue
        body = " + ".join(f"{c}*{_mono_text(e, var)}" for e, c in terms)
        comps.append(f"[{body}] e{i + 1}")
    return " + ".join(comps)


def _latex_coeff(c: GaussianRational) -> str:
    def frac(q):
        q_abs = abs(q)
        s = str(int(q_abs.numerator)) if q_abs.denominator == 1 else \
            rf"\frac{{{int(q_abs.numerator)}}}{{{int(q_abs.denominator)}}}"
        return ("-" if q < 0 else "") + s

    if not c.im:
        return frac(c.re)
    if not c.re:
        return frac(c.im) + " i"
    return rf"\left({frac(c.re)} {'+' if c.im > 0 else '-'} {frac(abs(c.im))} i\right)"


def _latex_mono(exp, var: str) -> str:
    parts = []
    for j, e in enumerate(exp):
        if e == 1:
            parts.append(f"{var}_{{{j + 1}}}")
        elif e > 1:
            parts.append(f"{var}_{{{j + 1}}}^{{{e}}}")
    return " ".join(parts) if parts else "1"


def to_latex(f: PolyVF, var: str = "x") -> str:
    if f.is_zero:
        return "0"
    rows = []
    for i in range(f.dim):
        terms = sorted(f.component(i).items(), key=lambda kv: (sum(kv[0]), kv[0]))
        body = " + ".join(f"{_latex_coeff(c)}\\, {_latex_mono(e, var)}" for e, c in terms) or "0"
        rows.append(body.replace("+ -", "- "))
    return r"\begin{pmatrix} " + r" \\ ".join(rows) + r" \end{pmatrix}"
