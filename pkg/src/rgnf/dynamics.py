"""Numerical experiments: integration, return maps, periodic orbits and
remainder-order scaling of truncated normal forms.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate as spi

from . import kernels
from . import rgcore as rg
from .polyvec import PolyVF

TWO_PI = 2 * math.pi


class StepUnderflow(RuntimeError):
    """The adaptive integrator could not make progress."""


class NonFiniteState(FloatingPointError):
    """The solution left the finite floating-point range."""


class NoReturn(RuntimeError):
    """No section crossing within the time budget."""


class NoSignChange(ValueError):
    """``P(r) - r`` has the same sign at both ends of the bracket."""


@dataclass
class Trajectory:
    """Sampled solution ``states[k] = x(times[k])``."""

    times: np.ndarray
    states: np.ndarray
    method: str
    step: float | None = None
    rtol: float | None = None
    atol: float | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states)
        if self.states.ndim != 2 or self.states.shape[0] != self.times.shape[0]:
            raise ValueError("states must have shape (len(times), dim)")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("sample times must be strictly increasing")

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def metadata(self) -> dict:
        return {"method": self.method, "step": self.step, "rtol": self.rtol, "atol": self.atol,
                "samples": int(len(self.times))}

    def to_csv(self, path=None, complex_states: bool | None = None) -> str:
        """CSV with header ``t,x1,...`` (real) or ``t,re1,im1,...`` (complex)."""
        if complex_states is None:
            complex_states = np.iscomplexobj(self.states) and bool(np.any(self.states.imag != 0))
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        n = self.dim
        if complex_states:
            w.writerow(["t"] + [f"{p}{k}" for k in range(1, n + 1) for p in ("re", "im")])
            for t, x in zip(self.times, self.states):
                row = [repr(float(t))]
                for v in x:
                    row += [repr(float(np.real(v))), repr(float(np.imag(v)))]
                w.writerow(row)
        else:
            w.writerow(["t"] + [f"x{k}" for k in range(1, n + 1)])
            for t, x in zip(self.times, self.states):
                w.writerow([repr(float(t))] + [repr(float(np.real(v))) for v in x])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        return text


def _check_finite(x, t):
    if not np.all(np.isfinite(x)):
        raise NonFiniteState(f"non-finite state at t={t}")


def rk4(field: Callable, x0, t_span, step: float) -> Trajectory:
    """Classical fixed-step RK4; the last step is shortened to hit ``t_span[1]``."""
    t0, t1 = map(float, t_span)
    if step <= 0:
        raise ValueError("step must be positive")
    n = max(1, int(math.ceil((t1 - t0) / step - 1e-12)))
    h = (t1 - t0) / n
    x = np.array(x0, dtype=np.result_type(np.asarray(x0).dtype, float))
    states = np.empty((n + 1, x.shape[0]), dtype=x.dtype)
    states[0] = x
    t = t0
    for k in range(n):
        k1 = field(t, x)
        k2 = field(t + 0.5 * h, x + 0.5 * h * k1)
        k3 = field(t + 0.5 * h, x + 0.5 * h * k2)
        k4 = field(t + h, x + h * k3)
        x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        t = t0 + (k + 1) * h
        _check_finite(x, t)
        states[k + 1] = x
    return Trajectory(t0 + h * np.arange(n + 1), states, "RK4", step=h)


def rk4_polynomial(lam, poly_terms: Sequence[tuple], x0, t_final: float, n_steps: int) -> Trajectory:
    """RK4 for ``x' = diag(lam) x + sum_k w_k p_k(x)`` with the compiled kernel.

    ``poly_terms`` is a list of ``(weight, PolyVF)``.
    """
    lam = np.asarray(lam, dtype=np.complex128)
    dim = len(lam)
    comps, exps, coeffs = [], [], []
    for w, p in poly_terms:
        if p.is_zero:
            continue
        c, e, v = p.pack()
        comps.append(c)
        exps.append(e)
        coeffs.append(v * w)
    if comps:
        comps_a = np.concatenate(comps)
        exps_a = np.ascontiguousarray(np.concatenate(exps, axis=0))
        coeffs_a = np.concatenate(coeffs)
    else:
        comps_a = np.zeros(0, dtype=np.int64)
        exps_a = np.zeros((0, dim), dtype=np.int64)
        coeffs_a = np.zeros(0, dtype=np.complex128)
    h = t_final / n_steps
    states = np.asarray(kernels.rk4_poly(lam, comps_a, exps_a, coeffs_a,
                                         np.asarray(x0, dtype=np.complex128), h, int(n_steps)))
    _check_finite(states[-1], t_final)
    return Trajectory(h * np.arange(n_steps + 1), states, "RK4-kernel", step=h)


def integrate(field: Callable, x0, t_span, method: str = "RK45", rtol: float = 1e-10,
              atol: float = 1e-12, step: float | None = None, t_eval=None,
              max_step: float = np.inf) -> Trajectory:
    """Integrate ``x' = field(t, x)``.

    ``method`` is an embedded Runge-Kutta pair accepted by
    :func:`scipy.integrate.solve_ivp` (``RK45`` by default, ``DOP853``) or
    ``"RK4"`` for the fixed-step classical scheme (needs ``step``).
    """
    t0, t1 = map(float, t_span)
    if not (math.isfinite(t0) and math.isfinite(t1)) or t1 <= t0:
        raise ValueError("t_span must be finite and increasing")
    if method.upper() == "RK4":
        if step is None:
            raise ValueError("RK4 needs a step")
        traj = rk4(field, x0, (t0, t1), step)
        if t_eval is not None:
            raise ValueError("t_eval is not supported with RK4; sample the returned grid")
        return traj
    x0 = np.asarray(x0)
    sol = spi.solve_ivp(field, (t0, t1), x0, method=method, rtol=rtol, atol=atol,
                        t_eval=t_eval, max_step=max_step)
    if sol.status == -1:
        if not np.all(np.isfinite(sol.y)):
            raise NonFiniteState(sol.message)
        raise StepUnderflow(sol.message)
    _check_finite(sol.y, sol.t[-1])
    return Trajectory(sol.t, sol.y.T, method, rtol=rtol, atol=atol)


# ---------------------------------------------------------------------------
# sections and return maps

@dataclass
class PolarSection:
    """The half-line ``theta = 0`` (``x2 = 0``, ``x1 > 0``) of a planar system.

    ``real_map`` turns a state into real plane coordinates ``(x1, x2)``;
    ``seed`` does the reverse for a point ``(rho, 0)``.  The reported radius
    is ``scale * |(x1, x2)|``.
    """

    scale: float = 1.0
    real_map: Callable | None = None
    seed: Callable | None = None
    min_return_time: float = 1.0
    budget: float = 10 * TWO_PI

    def plane(self, x):
        x = np.asarray(x)
        if self.real_map is not None:
            return np.asarray(self.real_map(x), dtype=float)
        return np.real(x[:2]).astype(float)

    def point(self, r: float):
        rho = r / self.scale
        if self.seed is not None:
            return np.asarray(self.seed(rho))
        return np.array([rho, 0.0])

    def radius(self, x) -> float:
        p = self.plane(x)
        return self.scale * float(math.hypot(p[0], p[1]))

    def value(self, x) -> float:
        return float(self.plane(x)[1])

    def to_dict(self) -> dict:
        return {"kind": "polar", "angle": 0.0, "radius_scale": self.scale,
                "min_return_time": self.min_return_time, "budget": self.budget}


@dataclass
class Crossing:
    time: float
    state: np.ndarray
    radius: float
    residual: float


def _crossing_direction(field, section: PolarSection, x0) -> float:
    """Sign of ``d/dt x2`` at the seed point."""
    h = 1e-7
    x0 = np.asarray(x0)
    x1 = x0 + h * np.asarray(field(0.0, x0))
    d = section.value(x1) - section.value(x0)
    if d == 0:
        raise NoReturn("flow is tangent to the section at the seed point")
    return 1.0 if d > 0 else -1.0


def poincare_map(field: Callable, section: PolarSection, x0, n_returns: int = 1,
                 method: str = "DOP853", rtol: float = 1e-12, atol: float = 1e-12) -> list:
    """Successive crossings of ``section`` starting from ``x0`` (on the section)."""
    direction = _crossing_direction(field, section, x0)
    t_min = section.min_return_time

    t_start = [0.0]

    def event(t, x):
        if t - t_start[0] < t_min:
            return direction
        return section.value(x)

    event.terminal = True
    event.direction = direction
    out = []
    x = np.asarray(x0)
    t = 0.0
    for _ in range(n_returns):
        t_start[0] = t
        sol = spi.solve_ivp(field, (t, t + section.budget), x, method=method, rtol=rtol,
                            atol=atol, events=event)
        if sol.status == -1:
            raise StepUnderflow(sol.message)
        if not sol.t_events[0].size:
            raise NoReturn(f"no return to the section within {section.budget:g} time units")
        t = float(sol.t_events[0][0])
        x = sol.y_events[0][0]
        _check_finite(x, t)
        out.append(Crossing(t, x, section.radius(x), abs(section.value(x))))
        direction = _crossing_direction(field, section, x)
    return out


def return_map(field: Callable, section: PolarSection, r: float, **kw) -> tuple:
    """``(P(r), return time)`` for the seed at radius ``r``."""
    c = poincare_map(field, section, section.point(r), 1, **kw)[0]
    return c.radius, c.time


@dataclass
class OrbitReport:
    section: dict
    radius: float
    slope: float
    classification: str
    residual: float
    period: float
    closure_residual: float
    tolerance: float
    bracket: tuple = ()
    evaluations: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["bracket"] = list(self.bracket)
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kw)


def classify_slope(mu: float) -> str:
    if abs(mu) < 1:
        return "attracting"
    if abs(mu) > 1:
        return "repelling"
    return "neutral"


def find_periodic_orbit(field: Callable, section: PolarSection, bracket, tol: float = 1e-10,
                        max_iter: int = 100, **kw) -> OrbitReport:
    """Fixed point of the return map on ``bracket`` and its stability.

    Bisection on ``P(r) - r`` until the bracket is below ``1e-6``, then
    secant refinement to ``tol``.  The slope ``mu = P'(r*)`` uses central
    differences with ``dr = 1e-4 (1 + r*)``.
    """
    a, b = map(float, bracket)
    count = [0]

    def F(r):
        count[0] += 1
        return return_map(field, section, r, **kw)[0] - r

    fa, fb = F(a), F(b)
    if fa * fb > 0:
        raise NoSignChange(f"P(r) - r has the same sign at r={a} ({fa:.3e}) and r={b} ({fb:.3e})")
    it = 0
    while b - a > 1e-6 and it < max_iter:
        c = 0.5 * (a + b)
        fc = F(c)
        if fc == 0:
            a = b = c
            fa = fb = 0.0
            break
        if fa * fc < 0:
            b, fb = c, fc
        else:
            a, fa = c, fc
        it += 1
    # secant refinement, kept inside the bracket
    r0, f0, r1, f1 = a, fa, b, fb
    r = a if abs(fa) < abs(fb) else b
    for _ in range(20):
        if f1 == f0:
            break
        r_new = r1 - f1 * (r1 - r0) / (f1 - f0)
        if not (min(a, b) - 1e-6 <= r_new <= max(a, b) + 1e-6):
            r_new = 0.5 * (r0 + r1)
        f_new = F(r_new)
        r0, f0, r1, f1 = r1, f1, r_new, f_new
        r = r_new
        if abs(r1 - r0) < tol * (1 + abs(r)) or f_new == 0:
            break
    dr = 1e-4 * (1 + r)
    mu = (return_map(field, section, r + dr, **kw)[0] - return_map(field, section, r - dr, **kw)[0]) / (2 * dr)
    P, period = return_map(field, section, r, **kw)
    count[0] += 3
    # closure: re-integrate one period from the orbit point
    x0 = section.point(r)
    sol = spi.solve_ivp(field, (0.0, period), x0, method=kw.get("method", "DOP853"),
                        rtol=kw.get("rtol", 1e-12), atol=kw.get("atol", 1e-12))
    closure = float(np.max(np.abs(section.plane(sol.y[:, -1]) - section.plane(x0)))) * section.scale
    return OrbitReport(section=section.to_dict(), radius=float(r), slope=float(mu),
                       classification=classify_slope(mu), residual=float(abs(P - r)),
                       period=float(period), closure_residual=closure,
                       tolerance=1e-6 * (1 + abs(r)), bracket=(float(bracket[0]), float(bracket[1])),
                       evaluations=count[0])


# ---------------------------------------------------------------------------
# remainder-order scaling

@dataclass
class ScalingReport:
    order: int
    eps: list
    errors: list
    slope: float
    target: tuple
    passed: bool
    steps: int
    t_final: float
    backend: str = field(default_factory=lambda: kernels.BACKEND)

    def to_dict(self) -> dict:
        return {"order": self.order, "eps": list(self.eps), "errors": list(self.errors),
                "slope": self.slope, "target": list(self.target), "passed": self.passed,
                "steps": self.steps, "t_final": self.t_final, "backend": self.backend}


def fit_slope(eps, errors) -> float:
    """Least-squares slope of ``log E`` against ``log eps``."""
    le = np.log(np.asarray(eps, dtype=float))
    lE = np.log(np.asarray(errors, dtype=float))
    return float(np.polyfit(le, lE, 1)[0])


def transformed_discrepancy(nf: rg.NormalFormResult, m: int, eps: float, z0, t_final: float = 1.0,
                            n_steps: int = 2000) -> float:
    """``max_t |x(t) - F(z(t))|`` for the original system started at ``F(z0)``
    and the order-``m`` normal form started at ``z0``; ``F`` is the order-``m``
    near-identity transform."""
    ps = nf.series
    lam = nf.A.lam
    F = rg.near_identity(nf)
    z0 = np.asarray(z0, dtype=np.complex128)
    x0 = F.forward(z0, eps, m)
    orig = rk4_polynomial(lam, [(eps ** k, g) for k, g in enumerate(ps.g, start=1)], x0, t_final, n_steps)
    norm = rk4_polynomial(lam, [(eps ** k, nf.PK_Rk[k - 1]) for k in range(1, m + 1)], z0, t_final, n_steps)
    Fz = F.forward(norm.states.T, eps, m).T
    return float(np.max(np.abs(orig.states - Fz)))


def residual_scaling(ps: rg.PerturbationSeries, m: int, eps_list=(1e-2, 5e-3, 2.5e-3), z0=None,
                     t_final: float = 1.0, n_steps: int = 2000, nf: rg.NormalFormResult | None = None,
                     window: float = 0.4) -> ScalingReport:
    """Fit the order of the trajectory discrepancy ``E(eps)``; pass if the slope is
    within ``m + 1 +- window``."""
    if nf is None or nf.order < m:
        nf = rg.compute_Rk(ps, m, with_secular=False)
    if z0 is None:
        z0 = np.full(ps.dim, 0.5 + 0.0j)
    errors = [transformed_discrepancy(nf, m, e, z0, t_final, n_steps) for e in eps_list]
    if min(errors) <= 0:
        slope = float("nan")
    else:
        slope = fit_slope(eps_list, errors)
    lo, hi = m + 1 - window, m + 1 + window
    return ScalingReport(order=m, eps=[float(e) for e in eps_list], errors=errors, slope=slope,
                         target=(lo, hi), passed=bool(lo <= slope <= hi), steps=n_steps, t_final=t_final)


# ---------------------------------------------------------------------------
# averaged radial function of a planar oscillator with odd nonlinearity

def radial_average(g: Callable, rho, points: Sequence[float] = ()) -> np.ndarray:
    """``R(rho) = int_0^{2 pi} cos t g(rho cos t) dt`` by adaptive quadrature.

    For ``x1' = x2 + 2 eps g(x1), x2' = -x1`` the first-order averaged
    Euclidean radius obeys ``rho' = (eps / pi) R(rho)``.  ``g`` must be odd;
    the integral is folded onto ``[0, pi/2]`` and split where ``rho cos t``
    meets one of ``points`` (kinks or edges of smoothing zones).
    """
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    out = np.empty_like(rho)
    for k, p in enumerate(rho):
        def integrand(t, p=p):
            return math.cos(t) * float(np.real(g(p * math.cos(t))))

        nodes = sorted({0.0, math.pi / 2, *(math.acos(b / p) for b in points if 0 < b < p)})
        total = 0.0
        for lo, hi in zip(nodes[:-1], nodes[1:]):
            total += spi.quad(integrand, lo, hi, limit=200, epsabs=1e-12, epsrel=1e-12)[0]
        out[k] = 4.0 * total
    return out


def mollifier_nodes(spec, upto: float) -> list:
    """Breakpoints and smoothing-zone edges of a mollified piecewise function up to ``upto``."""
    out = []
    k = 1
    while k * spec.width - spec.delta < upto:
        b = k * spec.width
        out += [b - spec.delta, b, b + spec.delta]
        k += 1
    return out


def sign_changes(x, y) -> list:
    """Linear-interpolated zero crossings of sampled ``y(x)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    roots = []
    for i in range(len(x) - 1):
        if y[i] == 0:
            roots.append(float(x[i]))
        elif y[i] * y[i + 1] < 0:
            roots.append(float(x[i] - y[i] * (x[i + 1] - x[i]) / (y[i + 1] - y[i])))
    return roots


__all__ = [
    "Trajectory", "integrate", "rk4", "rk4_polynomial", "PolarSection", "Crossing", "poincare_map",
    "return_map", "OrbitReport", "find_periodic_orbit", "classify_slope", "ScalingReport",
    "residual_scaling", "transformed_discrepancy", "fit_slope", "radial_average", "mollifier_nodes",
    "sign_changes",
    "StepUnderflow", "NonFiniteState", "NoReturn", "NoSignChange",
]
