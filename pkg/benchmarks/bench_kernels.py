"""Compare the compiled and numpy kernels on the residual-scaling workload.

Run with ``python3 benchmarks/bench_kernels.py [--repeat N]``.  The compiled
extension must have been built (``pip install -e . --no-build-isolation``).
"""
import argparse
import time

import numpy as np

from rgnf import fixtures as fx
from rgnf.kernels import _pykernels

try:
    from rgnf.kernels import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def _packed(seed=0):
    ps = fx.random_oscillator_series(seed=seed)
    field = ps.gk(1) + ps.gk(2)
    comps, exps, coeffs = field.pack()
    return ps.A.lam, comps, np.ascontiguousarray(exps), coeffs


def _time(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--points", type=int, default=20000)
    ap.add_argument("--steps", type=int, default=2000)
    args = ap.parse_args(argv)

    lam, comps, exps, coeffs = _packed()
    rng = np.random.default_rng(0)
    X = (rng.normal(size=(2, args.points)) + 1j * rng.normal(size=(2, args.points))) * 0.5
    x0 = np.array([0.5, 0.5], dtype=np.complex128)
    h = 1.0 / args.steps

    impls = [("python", _pykernels)]
    if _ckernels is not None:
        impls.append(("cython", _ckernels))
    else:
        print("compiled kernels not built; timing the numpy fallback only")

    rows = []
    for name, mod in impls:
        t_eval = _time(lambda: mod.poly_eval_batch(comps, exps, coeffs, X, 2), args.repeat)
        t_rk4 = _time(lambda: mod.rk4_poly(lam, comps, exps, coeffs, x0, h, args.steps), args.repeat)
        rows.append((name, t_eval, t_rk4))

    # both backends must agree before their timings mean anything
    if _ckernels is not None:
        a = _pykernels.rk4_poly(lam, comps, exps, coeffs, x0, h, args.steps)
        b = np.asarray(_ckernels.rk4_poly(lam, comps, exps, coeffs, x0, h, args.steps))
        print(f"max |python - cython| over the RK4 trajectory: {np.max(np.abs(a - b)):.2e}")

    print(f"{'backend':8s} {'poly_eval_batch':>16s} {'rk4_poly':>12s}")
    for name, t_eval, t_rk4 in rows:
        print(f"{name:8s} {t_eval * 1e3:13.2f} ms {t_rk4 * 1e3:9.2f} ms")
    if len(rows) == 2:
        print(f"speedup  {rows[0][1] / rows[1][1]:13.1f} x  {rows[0][2] / rows[1][2]:9.1f} x")


if __name__ == "__main__":
    main()
