"""Verification suites bundling the operator identities, the hierarchy check,
the remainder-order law and the two oscillator experiments.

Each suite returns a :class:`SuiteResult` of named checks with the measured
value and the tolerance it was held to.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import dynamics as dy
from . import fixtures as fx
from . import polyvec as pv
from . import rgcore as rg
from . import smoothavg as sa
from . import special
from .polyvec import GaussianRational, PolyVF
from .spectra import (DiagLinearPart, lie_derivative, project_I, project_K, pseudo_inverse_Q)

SUITES = ("props-32-34", "hierarchy", "scaling", "example41", "example42")


@dataclass
class Check:
    name: str
    passed: bool | None
    value: object = None
    tolerance: object = None
    detail: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "value": _jsonable(self.value),
                "tolerance": _jsonable(self.tolerance), "detail": self.detail}


@dataclass
class SuiteResult:
    suite: str
    checks: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed is not False for c in self.checks)

    def add(self, name, passed, value=None, tolerance=None, detail="") -> Check:
        c = Check(name, None if passed is None else bool(passed), value, tolerance, detail)
        self.checks.append(c)
        return c

    def to_dict(self) -> dict:
        return {"suite": self.suite, "passed": self.passed, "seconds": round(self.seconds, 3),
                "checks": [c.to_dict() for c in self.checks]}


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, GaussianRational):
        return [pv.format_rational(v.re), pv.format_rational(v.im)]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    return v


# ---------------------------------------------------------------------------
# operator identities

def _imag_unit_eigenvalues(rng, dim) -> DiagLinearPart:
    return DiagLinearPart([GaussianRational(0, int(rng.integers(-1, 2))) for _ in range(dim)])


def flow_derivative_residual(A: DiagLinearPart, g: PolyVF, s: float, x, h: float = 1e-5) -> float:
    """``|d/ds[e^{-As} Q(g)(e^{As} x)] - e^{-As} g(e^{As} x)|`` with a central difference."""
    Qg = pseudo_inverse_Q(A, g)

    def conj(f, s_):
        E = A.matrix_exp(s_)
        return f(E * x) / E

    fd = (conj(Qg, s + h) - conj(Qg, s - h)) / (2 * h)
    return float(np.max(np.abs(fd - conj(g, s))))


def props_suite(seed: int = 0, n_fields: int = 200, max_degree: int = 4, max_dim: int = 3) -> SuiteResult:
    """Projection, pseudo-inverse and product identities on random fields."""
    res = SuiteResult("props-32-34")
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    counts = {k: 0 for k in ("projections", "Q_inverse", "P_K_Q", "Q_product", "kernel_closed",
                             "image_products")}
    fails: dict = {k: [] for k in counts}
    for trial in range(n_fields):
        dim = int(rng.integers(1, max_dim + 1))
        A = fx.random_eigenvalues(rng, dim, imaginary=bool(trial % 2))
        f = fx.random_field(rng, dim, max_degree, 4)
        g = fx.random_VI(rng, A, max_degree, 3)
        h = fx.random_VK(rng, A, max_degree, 3)
        h2 = fx.random_VK(rng, A, max_degree, 3)
        PK, PI = project_K(A, f), project_I(A, f)
        ok = (project_K(A, PK) == PK and project_I(A, PI) == PI and project_K(A, PI).is_zero
              and PK + PI == f)
        counts["projections"] += 1
        if not ok:
            fails["projections"].append(trial)
        Qg = pseudo_inverse_Q(A, g)
        counts["Q_inverse"] += 1
        if not (pseudo_inverse_Q(A, lie_derivative(A, g)) == g and lie_derivative(A, Qg) == g):
            fails["Q_inverse"].append(trial)
        counts["P_K_Q"] += 1
        if not project_K(A, Qg).is_zero:
            fails["P_K_Q"].append(trial)
        # Q[Dg.Qg + DQg.g] = P_I[DQg.Qg]
        lhs_in = pv.jacobian_apply(g, Qg) + pv.jacobian_apply(Qg, g)
        counts["Q_product"] += 1
        if not (project_K(A, lhs_in).is_zero
                and pseudo_inverse_Q(A, lhs_in) == project_I(A, pv.jacobian_apply(Qg, Qg))):
            fails["Q_product"].append(trial)
        counts["kernel_closed"] += 1
        if not (project_I(A, pv.jacobian_apply(h, h2)).is_zero and project_I(A, pv.lie_bracket(h, h2)).is_zero):
            fails["kernel_closed"].append(trial)
        Dgh, Dhg, br = pv.jacobian_apply(g, h), pv.jacobian_apply(h, g), pv.lie_bracket(g, h)
        counts["image_products"] += 1
        ok = (project_K(A, Dgh).is_zero and pseudo_inverse_Q(A, Dgh) == pv.jacobian_apply(Qg, h)
              and project_K(A, Dhg).is_zero and pseudo_inverse_Q(A, Dhg) == pv.jacobian_apply(h, Qg)
              and project_K(A, br).is_zero and pseudo_inverse_Q(A, br) == pv.lie_bracket(Qg, h))
        if not ok:
            fails["image_products"].append(trial)
    labels = {
        "projections": "P_K, P_I idempotent, complementary, sum to identity",
        "Q_inverse": "Q L_A = id and L_A Q = id on the image",
        "P_K_Q": "P_K Q(g) = 0 for g in the image",
        "Q_product": "Q[Dg.Qg + DQg.g] = P_I[DQg.Qg]",
        "kernel_closed": "Dg.h and [g,h] stay resonant for resonant g, h",
        "image_products": "Dg.h, Dh.g, [g,h] non-resonant with Q(Dg.h)=DQg.h, Q(Dh.g)=Dh.Qg, Q[g,h]=[Qg,h]",
    }
    for key, label in labels.items():
        res.add(key, not fails[key], value={"fields": counts[key], "failures": fails[key][:5]},
                tolerance="exact", detail=label)
    # flow derivative of Q, numerically, purely imaginary spectra
    worst = 0.0
    for _ in range(n_fields // 4):
        dim = int(rng.integers(1, max_dim + 1))
        A = _imag_unit_eigenvalues(rng, dim)
        g = fx.random_VI(rng, A, max_degree, 3)
        if g.is_zero:
            continue
        x = (rng.uniform(-0.5, 0.5, dim) + 1j * rng.uniform(-0.5, 0.5, dim))
        s = float(rng.uniform(0, 2 * math.pi))
        worst = max(worst, flow_derivative_residual(A, g, s, x))
    res.add("flow_derivative_of_Q", worst <= 1e-9, value=worst, tolerance=1e-9,
            detail="d/ds[e^{-As} Q(g)(e^{As}x)] = e^{-As} g(e^{As}x), central difference h=1e-5")
    # non-resonant fields whose bracket has a resonant part
    found = None
    for _ in range(500):
        dim = int(rng.integers(1, max_dim + 1))
        A = fx.random_eigenvalues(rng, dim, imaginary=True)
        a, b = fx.random_VI(rng, A, 3, 2), fx.random_VI(rng, A, 3, 2)
        if not project_K(A, pv.lie_bracket(a, b)).is_zero:
            found = (A, a, b)
            break
    res.add("image_not_closed_under_bracket", found is not None,
            value=None if found is None else {"A": str(found[0]), "f": str(found[1]), "g": str(found[2])},
            detail="some f, g in the image have P_K([f, g]) != 0")
    res.seconds = time.perf_counter() - t0
    return res


# ---------------------------------------------------------------------------
# hierarchy

def second_order_solution_terms(ps: rg.PerturbationSeries) -> list:
    """``[c_0, c_1, c_2]`` of ``x_2 = c_0(u) + c_1(u) t + c_2(u) t^2`` built
    directly from ``g_1, g_2``:

    ``c_0 = Q P_I(R_2)``, ``c_1 = P_K(R_2) + D(Q g_1I).g_1K``,
    ``c_2 = 1/2 D(g_1K).g_1K`` with
    ``R_2 = Dg_1.Q(g_1I) + g_2 - D(Q g_1I).g_1K``.
    """
    A = ps.A
    g1 = ps.gk(1)
    g2 = ps.gk(2) if ps.m_max >= 2 else PolyVF.zero(ps.dim)
    g1K, g1I = project_K(A, g1), project_I(A, g1)
    Qg1I = pseudo_inverse_Q(A, g1I)
    R2 = pv.jacobian_apply(g1, Qg1I) + g2 - pv.jacobian_apply(Qg1I, g1K)
    c0 = pseudo_inverse_Q(A, project_I(A, R2))
    c1 = project_K(A, R2) + pv.jacobian_apply(Qg1I, g1K)
    c2 = pv.scale(pv.jacobian_apply(g1K, g1K), GaussianRational(pv.Q(1, 2)))
    return [c0, c1, c2]


def _hierarchy_systems(seed: int):
    rng = np.random.default_rng(seed + 1)
    yield "sine oscillator, degree 5", fx.sine_series(5)
    yield "random oscillator", fx.random_oscillator_series(seed)
    A = fx.random_eigenvalues(rng, 3)
    yield f"random dim-3 {A!r}", rg.PerturbationSeries(
        A, [fx.random_field(rng, 3, 2, 4), fx.random_field(rng, 3, 2, 3)])


def hierarchy_suite(seed: int = 0) -> SuiteResult:
    res = SuiteResult("hierarchy")
    t0 = time.perf_counter()
    for label, ps in _hierarchy_systems(seed):
        nf = rg.compute_Rk(ps, 3)
        for i in (1, 2, 3):
            r = rg.hierarchy_residual(nf, i)
            res.add(f"x{i} solves order-{i} equation [{label}]", r.is_zero, value=len(r.terms),
                    tolerance="exact (number of residual terms)")
        sol = rg.perturbation_solution(nf, 2)
        ref = second_order_solution_terms(ps)
        same = len(sol.coeffs) == 3 and all(a == b for a, b in zip(sol.coeffs, ref))
        res.add(f"x2 matches the closed form term by term [{label}]", same, tolerance="exact")
        eq = all(project_I(nf.A, p).is_zero for p in nf.PK_Rk)
        res.add(f"normal-form terms resonant [{label}]", eq, tolerance="exact")
    res.seconds = time.perf_counter() - t0
    return res


# ---------------------------------------------------------------------------
# remainder order

def scaling_suite(seed: int = 0, orders=(1, 2, 3), eps_values=(1e-2, 5e-3, 2.5e-3)) -> SuiteResult:
    res = SuiteResult("scaling")
    t0 = time.perf_counter()
    ps = fx.random_oscillator_series(seed)
    nf = rg.compute_Rk(ps, max(orders), with_secular=False)
    for m in orders:
        rep = dy.residual_scaling(ps, m, eps_values, nf=nf)
        res.add(f"remainder order m={m}", rep.passed, value={"slope": rep.slope, "errors": rep.errors},
                tolerance=list(rep.target))
    res.seconds = time.perf_counter() - t0
    return res


# ---------------------------------------------------------------------------
# sine oscillator

# (imaginary numerator, denominator) of each coefficient of the first-order transform
SINE_TRANSFORM = (
    {(0, 1): (1, 2), (3, 0): (1, 12), (1, 2): (-1, 4), (0, 3): (-1, 24)},
    {(1, 0): (-1, 2), (3, 0): (1, 24), (2, 1): (1, 4), (0, 3): (-1, 12)},
)


def sine_suite(eps: float = 0.1, grid_points: int = 50) -> SuiteResult:
    res = SuiteResult("example41")
    t0 = time.perf_counter()
    # first-order transform, degree <= 3
    nf3 = rg.compute_Rk(fx.sine_series(3), 1, with_secular=False)
    h1 = nf3.QPI_Rk[0]
    expect = [{q: GaussianRational(0, pv.Q(a, b)) for q, (a, b) in comp.items()} for comp in SINE_TRANSFORM]
    res.add("first-order transform, degree <= 3", [h1.component(i) for i in (0, 1)] == expect,
            value=str(h1), tolerance="exact")
    # radial coefficients
    nf7 = rg.compute_Rk(fx.sine_series(7), 2, with_secular=False)
    coeffs = rg.polar_coefficients(nf7.PK_Rk[0])
    oracle = special.j1_2r_taylor(7)
    ok = len(coeffs) == len(oracle) and all(
        c.im == 0 and c.re == pv.Q(o.numerator, o.denominator) for c, o in zip(coeffs, oracle))
    res.add("resonant radial coefficients = Taylor coefficients of J1(2r)", ok,
            value=[pv.format_rational(c.re) for c in coeffs], tolerance="exact")
    # averaged field on a grid
    pf = sa.PeriodicFlow(fx.OSCILLATOR)
    r = np.linspace(5.0 / grid_points, 5.0, grid_points)
    rdot, thdot = sa.radial_profile(pf, fx.sine_expr(), r)
    err_r = float(np.max(np.abs(rdot - special.j1(2 * r))))
    err_t = float(np.max(np.abs(thdot)))
    res.add("averaged radial rate = J1(2r)", err_r <= 1e-8, value=err_r, tolerance=1e-8)
    res.add("averaged angular rate = 1", err_t <= 1e-10, value=err_t, tolerance=1e-10)
    # second-order angular shift near the origin
    y = np.array([0.01, 0.01], dtype=np.complex128)
    P2 = sa.second_order_term(pf, fx.sine_expr(), None, y)
    _, dth = sa.polar_rates(P2[0], y[0])
    res.add("second-order angular shift -> -1/2", abs(float(dth) + 0.5) <= 1e-3, value=float(dth), tolerance=1e-3)
    # periodic orbits
    field_ = fx.sine_real_field(eps)
    sec = dy.PolarSection(scale=fx.SINE_RADIUS_SCALE)
    zeros = [z / 2 for z in special.j1_zeros(2)]
    reports = []
    for target, bracket in zip(zeros, [(1.5, 2.3), (3.2, 3.9)]):
        rep = dy.find_periodic_orbit(field_, sec, bracket)
        reports.append(rep)
        res.add(f"orbit near {target:.5f}", abs(rep.radius - target) <= 0.05,
                value={"radius": rep.radius, "slope": rep.slope, "classification": rep.classification},
                tolerance=0.05)
        res.add(f"orbit near {target:.5f} closes", rep.closure_residual <= rep.tolerance,
                value=rep.closure_residual, tolerance=rep.tolerance)
    res.add("stability alternates", reports[0].classification == "attracting"
            and reports[1].classification == "repelling",
            value=[rp.classification for rp in reports])
    predicted = math.exp(2 * math.pi * eps * 2 * float(special.j1_prime(2 * zeros[0])))
    res.add("first orbit slope vs averaged prediction", None, value={"measured": reports[0].slope,
                                                                     "predicted": predicted})
    res.add("higher-order normal form (report only)", None,
            value=[str(p) for p in rg.compute_Rk(fx.sine_series(7), 3, with_secular=False).PK_Rk],
            detail="eps-graded terms; not compared term by term with a degree-graded listing")
    res.seconds = time.perf_counter() - t0
    return res


# ---------------------------------------------------------------------------
# mollified sawtooth oscillator

def sawtooth_suite(eps: float = 0.05, delta: float = 0.05) -> SuiteResult:
    res = SuiteResult("example42")
    t0 = time.perf_counter()
    spec = fx.sawtooth_spec(delta)
    rho = np.linspace(0.05, 3.6, 356)
    R = dy.radial_average(spec, rho, points=dy.mollifier_nodes(spec, 4.0))
    roots = dy.sign_changes(rho, R)
    for n in (1, 2, 3):
        near = [x for x in roots if abs(x - n) < 0.2]
        res.add(f"R has a zero near {n}", bool(near), value=near, tolerance=0.2)
    sec = dy.PolarSection(scale=fx.SAWTOOTH_RADIUS_SCALE)
    rep = dy.find_periodic_orbit(fx.sawtooth_real_field(eps, delta), sec, (0.6, 1.4))
    res.add("attracting orbit near 1", abs(rep.radius - 1) < 0.2 and abs(rep.slope) < 1,
            value={"radius": rep.radius, "slope": rep.slope}, tolerance={"radius": 0.2, "slope": 1})
    res.add("orbit closes", rep.closure_residual <= rep.tolerance, value=rep.closure_residual,
            tolerance=rep.tolerance)
    probes = np.array([0.5, 1.5, 2.5, 3.5])
    Rp = dy.radial_average(spec, probes, points=dy.mollifier_nodes(spec, 4.0))
    res.add("profile R(rho) vs +-2 pi rho (report only)", None,
            value={"rho": probes.tolist(), "R": Rp.tolist(),
                   "2pi_rho": (2 * math.pi * probes).tolist()})
    res.seconds = time.perf_counter() - t0
    return res


RUNNERS = {
    "props-32-34": lambda seed: props_suite(seed),
    "hierarchy": lambda seed: hierarchy_suite(seed),
    "scaling": lambda seed: scaling_suite(seed),
    "example41": lambda seed: sine_suite(),
    "example42": lambda seed: sawtooth_suite(),
}


def run(suite: str, seed: int = 0) -> SuiteResult:
    if suite not in RUNNERS:
        raise KeyError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
    return RUNNERS[suite](seed)
