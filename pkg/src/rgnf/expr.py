"""Expression language for smooth vector fields.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := ('+' | '-') factor | base ('^' uint)?
    base   := number | ident | '(' expr ')' | func '(' expr ')'
    func   := 'sin' | 'cos' | 'exp' | 'mollipw'
    ident  := 'x' uint | 'I' | parameter name

Numbers are decimals; ``p/q`` is ordinary division of literals and stays
exact.  ``I`` is the imaginary unit.  Multiplication is always explicit.

One parsed tree serves three evaluators: complex numpy arrays,
dual numbers (directional derivatives) and exact truncated power series
(Taylor coefficients at the origin).
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from . import polyvec as pv
from .polyvec import DimensionError, GaussianRational, PolyVF

FUNCTIONS = ("sin", "cos", "exp", "mollipw")


class ExprSyntaxError(SyntaxError):
    """Malformed expression; carries 1-based ``lineno`` and ``offset`` (column)."""

    def __init__(self, msg: str, line: int, col: int, text: str = ""):
        super().__init__(f"{msg} (line {line}, column {col})")
        self.msg = msg
        self.lineno = line
        self.offset = col
        self.text = text


class NotAnalyticAtOrigin(ValueError):
    """Taylor expansion requested for a non-analytic construct."""


class TaylorError(ValueError):
    """The exact Taylor backend cannot represent the result."""


# ---------------------------------------------------------------------------
# mollified piecewise-linear functions

@dataclass(frozen=True)
class MollifierSpec:
    """Piecewise-linear ``g(x) = s_k x`` on ``[k w, (k+1) w)`` for ``x >= 0``.

    The slopes cycle through ``slopes``; with ``odd`` the function is
    extended by ``g(-x) = -g(x)``.  Each breakpoint ``b = k w`` (``k >= 1``)
    is smoothed on ``(b - delta, b + delta)`` by blending the two adjacent
    linear pieces with ``sigma(u) = psi(u) / (psi(u) + psi(1 - u))``,
    ``psi(u) = exp(-1/u)``.  The defaults give the alternating ``+x, -x``
    pattern with unit width.
    """

    slopes: tuple = (1.0, -1.0)
    width: float = 1.0
    delta: float = 0.05
    odd: bool = True

    def __post_init__(self):
        if not self.slopes:
            raise ValueError("need at least one slope")
        if self.delta <= 0:
            raise ValueError("mollifier half-width delta must be positive")
        if 2 * self.delta >= self.width:
            raise ValueError("mollifier intervals overlap: need 2*delta < width")

    def slope(self, k):
        s = np.asarray(self.slopes, dtype=float)
        return s[np.mod(k, len(s)).astype(int)]

    def raw(self, x):
        """Unsmoothed piecewise function."""
        x = np.asarray(x, dtype=float)
        ax = np.abs(x) if self.odd else x
        k = np.floor(ax / self.width)
        if not self.odd:
            k = np.maximum(k, 0)
        return self.slope(k) * x

    def _blend(self, x):
        """Value, derivative of the smoothed function on real ``x``."""
        x = np.asarray(x, dtype=float)
        shape = x.shape
        x = x.reshape(-1)
        ax = np.abs(x) if self.odd else x
        sgn = np.where(x < 0, -1.0, 1.0) if self.odd else np.ones_like(x)
        k = np.floor(ax / self.width)
        s = self.slope(np.maximum(k, 0))
        val = s * x
        der = s.copy()
        j = np.rint(ax / self.width)
        b = j * self.width
        zone = (j >= 1) & (np.abs(ax - b) < self.delta)
        if np.any(zone):
            az, bz, jz = ax[zone], b[zone], j[zone]
            sl, sr = self.slope(jz - 1), self.slope(jz)
            u = (az - (bz - self.delta)) / (2 * self.delta)
            sig, dsig = _sigma(u)
            # in |x| coordinates: h(a) = ((1-sig) sl + sig sr) a
            slope_a = (1 - sig) * sl + sig * sr
            h = slope_a * az
            dh = slope_a + dsig / (2 * self.delta) * (sr - sl) * az
            val[zone] = sgn[zone] * h
            der[zone] = dh  # odd extension: d/dx[sgn h(|x|)] = h'(|x|)
        return val.reshape(shape), der.reshape(shape)

    def scalar(self, x: float) -> float:
        """Fast path for one real number."""
        ax = abs(x) if self.odd else x
        j = round(ax / self.width)
        if j >= 1 and abs(ax - j * self.width) < self.delta:
            n = len(self.slopes)
            sl, sr = self.slopes[(j - 1) % n], self.slopes[j % n]
            u = (ax - (j * self.width - self.delta)) / (2 * self.delta)
            a = math.exp(-1.0 / u) if u > 0 else 0.0
            b = math.exp(-1.0 / (1.0 - u)) if u < 1 else 0.0
            sig = a / (a + b)
            h = ((1 - sig) * sl + sig * sr) * ax
            return -h if (self.odd and x < 0) else h
        k = max(math.floor(ax / self.width), 0)
        return self.slopes[k % len(self.slopes)] * x

    def __call__(self, x):
        if isinstance(x, (float, int)):
            return self.scalar(float(x))
        return self._blend(x)[0]

    def derivative(self, x):
        return self._blend(x)[1]


def _sigma(u):
    u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        a = np.where(u > 0, np.exp(-1.0 / np.where(u > 0, u, 1.0)), 0.0)
        v = 1.0 - u
        b = np.where(v > 0, np.exp(-1.0 / np.where(v > 0, v, 1.0)), 0.0)
        da = np.where(u > 0, a / np.where(u > 0, u, 1.0) ** 2, 0.0)
        db = np.where(v > 0, b / np.where(v > 0, v, 1.0) ** 2, 0.0)
        den = a + b
        sig = a / den
        # d/du [a/(a+b)] with db/du = -db
        dsig = (da * b + a * db) / den ** 2
    return sig, dsig


# ---------------------------------------------------------------------------
# AST

class Node:
    __slots__ = ()


@dataclass(frozen=True)
class Num(Node):
    value: GaussianRational

    def __str__(self):
        return f"({self.value})" if self.value.im else str(self.value)


@dataclass(frozen=True)
class Var(Node):
    index: int  # 0-based

    def __str__(self):
        return f"x{self.index + 1}"


@dataclass(frozen=True)
class Param(Node):
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Neg(Node):
    arg: Node

    def __str__(self):
        return f"-({self.arg})"


@dataclass(frozen=True)
class BinOp(Node):
    op: str
    left: Node
    right: Node

    def __str__(self):
        return f"({self.left} {self.op} {self.right})"


@dataclass(frozen=True)
class Pow(Node):
    base: Node
    exponent: int

    def __str__(self):
        return f"({self.base})^{self.exponent}"


@dataclass(frozen=True)
class Func(Node):
    name: str
    arg: Node

    def __str__(self):
        return f"{self.name}({self.arg})"


@dataclass(frozen=True)
class Mollified(Node):
    arg: Node
    spec: MollifierSpec

    def __str__(self):
        return f"mollipw({self.arg})"


def walk(node: Node):
    yield node
    for child in _children(node):
        yield from walk(child)


def _children(node):
    if isinstance(node, (Neg, Func, Mollified)):
        return (node.arg,)
    if isinstance(node, BinOp):
        return (node.left, node.right)
    if isinstance(node, Pow):
        return (node.base,)
    return ()


def max_var_index(node: Node) -> int:
    """Largest 0-based variable index, or -1."""
    return max((n.index for n in walk(node) if isinstance(n, Var)), default=-1)


def is_analytic(node: Node) -> bool:
    return not any(isinstance(n, Mollified) for n in walk(node))


# ---------------------------------------------------------------------------
# parser

_TOKEN = re.compile(
    r"(?P<ws>[ \t]+)|(?P<num>(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?)|(?P<id>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()])"
)


@dataclass
class _Tok:
    kind: str
    text: str
    col: int


def _tokenize(src: str, line: int) -> list:
    toks, pos = [], 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {src[pos]!r}", line, pos + 1, src)
        if m.lastgroup != "ws":
            toks.append(_Tok(m.lastgroup, m.group(), pos + 1))
        pos = m.end()
    toks.append(_Tok("end", "", len(src) + 1))
    return toks


class _Parser:
    def __init__(self, src, line, params, mollifier, dim):
        self.src = src
        self.line = line
        self.toks = _tokenize(src, line)
        self.i = 0
        self.params = params
        self.mollifier = mollifier
        self.dim = dim

    def peek(self):
        return self.toks[self.i]

    def next(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def error(self, msg, tok=None):
        tok = tok or self.peek()
        raise ExprSyntaxError(msg, self.line, tok.col, self.src)

    def expect(self, text):
        t = self.peek()
        if t.text != text:
            self.error(f"expected {text!r}, found {t.text or 'end of input'!r}")
        return self.next()

    def parse(self):
        if self.peek().kind == "end":
            self.error("empty expression")
        node = self.expr()
        if self.peek().kind != "end":
            self.error(f"unexpected {self.peek().text!r}")
        return node

    def expr(self):
        node = self.term()
        while self.peek().text in ("+", "-"):
            op = self.next().text
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek().text in ("*", "/"):
            op = self.next().text
            node = BinOp(op, node, self.factor())
        return node

    def factor(self):
        t = self.peek()
        if t.text in ("+", "-"):
            self.next()
            arg = self.factor()
            return Neg(arg) if t.text == "-" else arg
        node = self.base()
        if self.peek().text == "^":
            self.next()
            e = self.peek()
            if e.kind != "num" or not e.text.isdigit():
                self.error("exponent must be a non-negative integer literal")
            self.next()
            node = Pow(node, int(e.text))
        return node

    def base(self):
        t = self.next()
        if t.kind == "num":
            return Num(GaussianRational(pv.as_rational(t.text)))
        if t.text == "(":
            node = self.expr()
            self.expect(")")
            return node
        if t.kind == "id":
            name = t.text
            if name in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                if name == "mollipw":
                    return Mollified(arg, self.mollifier)
                return Func(name, arg)
            m = re.fullmatch(r"x([1-9]\d*)", name)
            if m:
                idx = int(m.group(1)) - 1
                if self.dim is not None and idx >= self.dim:
                    raise DimensionError(
                        f"variable {name} exceeds dimension {self.dim} (line {self.line}, column {t.col})")
                return Var(idx)
            if name == "I":
                return Num(pv.I)
            if name in self.params:
                return Param(name)
            self.i -= 1
            self.error(f"unknown identifier {name!r}", t)
        if t.kind == "end":
            self.i -= 1
            self.error("unexpected end of input", t)
        self.i -= 1
        self.error(f"unexpected {t.text!r}", t)


def parse_expr(src: str, params: Iterable[str] = (), mollifier: MollifierSpec | None = None,
               dim: int | None = None, line: int = 1) -> Node:
    """Parse one scalar expression."""
    return _Parser(src, line, set(params), mollifier or MollifierSpec(), dim).parse()


@dataclass(frozen=True)
class VectorFieldDef:
    """A vector field ``x -> (e_1(x), ..., e_n(x))`` on ``C^n``.

    ``params`` holds default parameter values; they can be overridden at
    evaluation time.
    """

    dim: int
    components: tuple
    params: Mapping = field(default_factory=dict)
    fixed_point: bool = False

    def __post_init__(self):
        if len(self.components) != self.dim:
            raise DimensionError(f"{len(self.components)} components for dimension {self.dim}")
        for c in self.components:
            if max_var_index(c) >= self.dim:
                raise DimensionError(f"component {c} uses a variable beyond x{self.dim}")
        if self.fixed_point:
            val = evaluate(self, np.zeros(self.dim))
            if np.max(np.abs(val)) > 1e-14:
                raise ValueError(f"declared fixed point at the origin but field(0) = {val}")

    @property
    def analytic(self) -> bool:
        return all(is_analytic(c) for c in self.components)

    def __call__(self, x, params: Mapping | None = None):
        return evaluate(self, x, params)

    def __str__(self):
        return "; ".join(str(c) for c in self.components)


def parse(src, dim: int | None = None, params: Mapping | Iterable[str] | None = None,
          mollifier: MollifierSpec | None = None, fixed_point: bool = False) -> VectorFieldDef:
    """Parse a vector field.

    ``src`` is a list of component strings or one string whose components
    are separated by ``;`` or newlines (``#`` starts a comment).  ``dim``
    defaults to the number of components.
    """
    if isinstance(src, str):
        pieces = []
        for lineno, raw in enumerate(src.splitlines() or [""], start=1):
            text = raw.split("#", 1)[0]
            for chunk in text.split(";"):
                if chunk.strip():
                    pieces.append((chunk, lineno))
    else:
        pieces = [(s, k) for k, s in enumerate(src, start=1)]
    if not pieces:
        raise ExprSyntaxError("empty vector field", 1, 1)
    if dim is None:
        dim = len(pieces)
    if params is None:
        params = {}
    if not isinstance(params, Mapping):
        params = {name: None for name in params}
    comps = tuple(parse_expr(s, params.keys(), mollifier, dim, line) for s, line in pieces)
    return VectorFieldDef(dim, comps, dict(params), fixed_point)


def from_polyvf(f: PolyVF) -> VectorFieldDef:
    """Expression form of a polynomial field (exact coefficients kept)."""
    comps = []
    for i in range(f.dim):
        node = None
        for exp, c in sorted(f.component(i).items(), key=lambda kv: (sum(kv[0]), kv[0])):
            mono: Node = Num(c)
            for j, qj in enumerate(exp):
                if qj:
                    mono = BinOp("*", mono, Pow(Var(j), qj) if qj > 1 else Var(j))
            node = mono if node is None else BinOp("+", node, mono)
        comps.append(node if node is not None else Num(pv.ZERO))
    return VectorFieldDef(f.dim, tuple(comps))


# ---------------------------------------------------------------------------
# compilation to closures over an arithmetic backend

class _NumpyOps:
    @staticmethod
    def const(c: GaussianRational):
        return complex(c)

    @staticmethod
    def func(name, a):
        return {"sin": np.sin, "cos": np.cos, "exp": np.exp}[name](a)

    @staticmethod
    def mollify(spec: MollifierSpec, a):
        a = np.asarray(a)
        if np.iscomplexobj(a):
            scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
            if a.size and np.max(np.abs(a.imag)) > 1e-9 * scale:
                raise ValueError("mollipw is defined for real arguments only")
            a = a.real
        return spec(a)

    @staticmethod
    def power(a, n):
        return a ** n


def _compile(node: Node, ops) -> Callable:
    """Closure ``f(xs, params)`` evaluating ``node`` with backend ``ops``."""
    if isinstance(node, Num):
        c = ops.const(node.value)
        return lambda xs, p: c
    if isinstance(node, Var):
        k = node.index
        return lambda xs, p: xs[k]
    if isinstance(node, Param):
        name = node.name
        return lambda xs, p: p[name]
    if isinstance(node, Neg):
        f = _compile(node.arg, ops)
        return lambda xs, p: -f(xs, p)
    if isinstance(node, BinOp):
        l, r = _compile(node.left, ops), _compile(node.right, ops)
        if node.op == "+":
            return lambda xs, p: l(xs, p) + r(xs, p)
        if node.op == "-":
            return lambda xs, p: l(xs, p) - r(xs, p)
        if node.op == "*":
            return lambda xs, p: l(xs, p) * r(xs, p)
        return lambda xs, p: l(xs, p) / r(xs, p)
    if isinstance(node, Pow):
        b, n = _compile(node.base, ops), node.exponent
        return lambda xs, p: ops.power(b(xs, p), n)
    if isinstance(node, Func):
        a, name = _compile(node.arg, ops), node.name
        return lambda xs, p: ops.func(name, a(xs, p))
    if isinstance(node, Mollified):
        a, spec = _compile(node.arg, ops), node.spec
        return lambda xs, p: ops.mollify(spec, a(xs, p))
    raise TypeError(f"unknown node {node!r}")


def _resolve_params(vf: VectorFieldDef, params: Mapping | None, convert=complex) -> dict:
    merged = dict(vf.params)
    if params:
        unknown = set(params) - set(merged)
        if unknown:
            raise KeyError(f"undeclared parameters: {sorted(unknown)}")
        merged.update(params)
    missing = [k for k, v in merged.items() if v is None]
    if missing:
        raise KeyError(f"no value for parameters: {missing}")
    return {k: convert(v) for k, v in merged.items()}


def compile_field(vf: VectorFieldDef, params: Mapping | None = None) -> Callable:
    """Fast numeric callable ``x -> field(x)``.

    ``x`` has shape ``(n,)`` or ``(n, P)``; the result has the same shape and
    complex dtype.
    """
    p = _resolve_params(vf, params)
    fns = [_compile(c, _NumpyOps) for c in vf.components]
    n = vf.dim

    def f(x):
        x = np.asarray(x, dtype=np.complex128)
        if x.shape[0] != n:
            raise DimensionError(f"point has {x.shape[0]} entries, field has dim {n}")
        xs = [x[k] for k in range(n)]
        out = np.empty(x.shape, dtype=np.complex128)
        for k, fn in enumerate(fns):
            out[k] = fn(xs, p)
        return out

    return f


def evaluate(vf: VectorFieldDef, x, params: Mapping | None = None) -> np.ndarray:
    """Componentwise complex evaluation at ``x`` (shape ``(n,)`` or ``(n, P)``)."""
    return compile_field(vf, params)(x)


# ---------------------------------------------------------------------------
# forward-mode derivatives

class Dual:
    """``a + b e`` with ``e^2 = 0``; ``a`` and ``b`` are complex arrays or scalars."""

    __slots__ = ("val", "der")

    def __init__(self, val, der=0.0):
        self.val = val
        self.der = der

    @staticmethod
    def _lift(o):
        return o if isinstance(o, Dual) else Dual(o, 0.0)

    def __add__(self, o):
        o = Dual._lift(o)
        return Dual(self.val + o.val, self.der + o.der)

    __radd__ = __add__

    def __sub__(self, o):
        o = Dual._lift(o)
        return Dual(self.val - o.val, self.der - o.der)

    def __rsub__(self, o):
        return Dual._lift(o) - self

    def __neg__(self):
        return Dual(-self.val, -self.der)

    def __mul__(self, o):
        o = Dual._lift(o)
        return Dual(self.val * o.val, self.der * o.val + self.val * o.der)

    __rmul__ = __mul__

    def __truediv__(self, o):
        o = Dual._lift(o)
        return Dual(self.val / o.val, (self.der * o.val - self.val * o.der) / o.val ** 2)

    def __rtruediv__(self, o):
        return Dual._lift(o) / self

    def __pow__(self, n: int):
        if n == 0:
            return Dual(1.0 + 0 * self.val, 0 * self.der)
        return Dual(self.val ** n, n * self.val ** (n - 1) * self.der)

    def __repr__(self):
        return f"Dual({self.val!r}, {self.der!r})"


class _DualOps:
    const = staticmethod(lambda c: complex(c))

    @staticmethod
    def func(name, a):
        a = Dual._lift(a)
        if name == "sin":
            return Dual(np.sin(a.val), np.cos(a.val) * a.der)
        if name == "cos":
            return Dual(np.cos(a.val), -np.sin(a.val) * a.der)
        e = np.exp(a.val)
        return Dual(e, e * a.der)

    @staticmethod
    def mollify(spec, a):
        a = Dual._lift(a)
        v = np.asarray(a.val)
        if np.iscomplexobj(v):
            v = v.real
        val, der = spec._blend(v)
        return Dual(val, der * a.der)

    @staticmethod
    def power(a, n):
        return a ** n


def forward_derivative(vf: VectorFieldDef, x, direction, params: Mapping | None = None) -> np.ndarray:
    """Directional derivative ``D field(x) . v`` by dual numbers."""
    p = _resolve_params(vf, params)
    x = np.asarray(x, dtype=np.complex128)
    v = np.asarray(direction, dtype=np.complex128)
    if x.shape[0] != vf.dim or v.shape != x.shape:
        raise DimensionError("point and direction must match the field dimension")
    xs = [Dual(x[k], v[k]) for k in range(vf.dim)]
    out = np.empty(x.shape, dtype=np.complex128)
    for k, c in enumerate(vf.components):
        r = _compile(c, _DualOps)(xs, p)
        out[k] = r.der if isinstance(r, Dual) else 0.0
    return out


def jacobian(vf: VectorFieldDef, x, params: Mapping | None = None) -> np.ndarray:
    """Full Jacobian matrix at a single point by ``n`` dual passes."""
    n = vf.dim
    cols = [forward_derivative(vf, x, np.eye(n)[k], params) for k in range(n)]
    return np.stack(cols, axis=1)


# ---------------------------------------------------------------------------
# exact Taylor coefficients

class _Series:
    """Truncated multivariate power series with Gaussian-rational coefficients."""

    __slots__ = ("n", "deg", "c")

    def __init__(self, n, deg, c):
        self.n, self.deg, self.c = n, deg, c

    @classmethod
    def const(cls, n, deg, v):
        return cls(n, deg, {(0,) * n: v} if v else {})

    def _lift(self, o):
        if isinstance(o, _Series):
            return o
        return _Series.const(self.n, self.deg, GaussianRational.coerce(o))

    def constant(self):
        return self.c.get((0,) * self.n, pv.ZERO)

    def __add__(self, o):
        o = self._lift(o)
        out = dict(self.c)
        for e, v in o.c.items():
            s = out.get(e, pv.ZERO) + v
            if s:
                out[e] = s
            else:
                out.pop(e, None)
        return _Series(self.n, self.deg, out)

    __radd__ = __add__

    def __neg__(self):
        return _Series(self.n, self.deg, {e: -v for e, v in self.c.items()})

    def __sub__(self, o):
        return self + (-self._lift(o))

    def __rsub__(self, o):
        return self._lift(o) - self

    def __mul__(self, o):
        o = self._lift(o)
        out: dict = {}
        for e1, v1 in self.c.items():
            d1 = sum(e1)
            for e2, v2 in o.c.items():
                if d1 + sum(e2) > self.deg:
                    continue
                e = tuple(a + b for a, b in zip(e1, e2))
                s = out.get(e, pv.ZERO) + v1 * v2
                if s:
                    out[e] = s
                else:
                    out.pop(e, None)
        return _Series(self.n, self.deg, out)

    __rmul__ = __mul__

    def scale(self, k):
        return _Series(self.n, self.deg, {e: v * k for e, v in self.c.items() if v * k})

    def reciprocal(self):
        c0 = self.constant()
        if not c0:
            raise TaylorError("division by a series vanishing at the origin")
        inv = c0.reciprocal()
        rest = (self - c0).scale(-inv)  # 1/(c0 (1 - rest)) = inv * sum rest^k
        out = _Series.const(self.n, self.deg, pv.ONE)
        term = out
        for _ in range(self.deg):
            term = term * rest
            if not term.c:
                break
            out = out + term
        return out.scale(inv)

    def __truediv__(self, o):
        o = self._lift(o)
        return self * o.reciprocal()

    def __rtruediv__(self, o):
        return self._lift(o) / self

    def __pow__(self, k: int):
        out = _Series.const(self.n, self.deg, pv.ONE)
        base = self
        while k:
            if k & 1:
                out = out * base
            k >>= 1
            if k:
                base = base * base
        return out


def _series_fun(name, s: _Series) -> _Series:
    if s.constant():
        raise TaylorError(f"{name} of an argument with nonzero value at the origin has irrational coefficients")
    out = _Series.const(s.n, s.deg, pv.ZERO)
    power = _Series.const(s.n, s.deg, pv.ONE)
    for k in range(s.deg + 1):
        if name == "exp":
            coef = pv.Q(1, math.factorial(k))
        elif name == "sin":
            coef = pv.Q((-1) ** (k // 2), math.factorial(k)) if k % 2 else pv.Q(0)
        else:
            coef = pv.Q((-1) ** (k // 2), math.factorial(k)) if k % 2 == 0 else pv.Q(0)
        if coef:
            out = out + power.scale(GaussianRational(coef))
        power = power * s
        if not power.c:
            break
    return out


class _SeriesOps:
    @staticmethod
    def const(c):
        return c  # lifted lazily by _Series arithmetic

    @staticmethod
    def func(name, a):
        if not isinstance(a, _Series):
            raise TaylorError(f"{name} of a constant has irrational value")
        return _series_fun(name, a)

    @staticmethod
    def mollify(spec, a):
        raise NotAnalyticAtOrigin("mollipw has no exact Taylor expansion")

    @staticmethod
    def power(a, n):
        return a ** n


def taylor(vf: VectorFieldDef, degree: int, params: Mapping | None = None,
           constant_free: bool = False) -> PolyVF:
    """Exact Taylor polynomial at the origin up to total degree ``degree``.

    Parameter values are converted to exact rationals (floats via their
    shortest decimal form).
    """
    if degree < 0:
        raise ValueError("degree must be non-negative")
    for c in vf.components:
        if not is_analytic(c):
            raise NotAnalyticAtOrigin("mollipw has no exact Taylor expansion")
    p = _resolve_params(vf, params, convert=GaussianRational.coerce)
    n = vf.dim
    xs = [_Series(n, degree, {tuple(1 if j == k else 0 for j in range(n)): pv.ONE}) for k in range(n)]
    terms = {}
    for i, comp in enumerate(vf.components):
        r = _compile(comp, _SeriesOps)(xs, p)
        if not isinstance(r, _Series):
            r = _Series.const(n, degree, GaussianRational.coerce(r))
        for e, v in r.c.items():
            terms[(i, e)] = v
    if constant_free:
        bad = [k for k in terms if sum(k[1]) == 0]
        if bad:
            raise ValueError("field does not vanish at the origin")
    return PolyVF(n, terms, constant_free=constant_free)


__all__ = [
    "ExprSyntaxError", "NotAnalyticAtOrigin", "TaylorError", "DimensionError", "MollifierSpec",
    "Node", "Num", "Var", "Param", "Neg", "BinOp", "Pow", "Func", "Mollified",
    "VectorFieldDef", "parse", "parse_expr", "from_polyvf", "evaluate", "compile_field",
    "Dual", "forward_derivative", "jacobian", "taylor", "walk", "max_var_index", "is_analytic",
]
