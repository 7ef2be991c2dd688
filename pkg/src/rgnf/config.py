"""Job configuration: one JSON document per run, validated against the bundled schema."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from . import expr as ex
from . import polyvec as pv
from .polyvec import GaussianRational
from .rgcore import PerturbationSeries
from .spectra import DiagLinearPart

DEFAULT_OPTIONS = {
    "taylor_degree": 7,
    "M": 256,
    "base_frequency": 1.0,
    "long_window": False,
    "tol": 1e-12,
    "eps": 0.1,
    "eps_values": [1e-2, 5e-3, 2.5e-3],
    "grid": {"start": 0.1, "stop": 5.0, "count": 50},
    "t_span": [0.0, 10.0],
    "step": 0.01,
    "integrator": "RK4",
    "radius_scale": 1.0,
}


class ConfigError(ValueError):
    """Invalid job configuration."""


def schema() -> dict:
    text = resources.files("rgnf").joinpath("schema/jobconfig.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def _complex(v) -> complex:
    if isinstance(v, (list, tuple)):
        return complex(float(v[0]), float(v[1]))
    return complex(v)


@dataclass
class JobConfig:
    dim: int
    A: DiagLinearPart
    mode: str
    order: int
    params: dict
    perturbation: list
    mollifier: ex.MollifierSpec
    options: dict
    real_map: np.ndarray | None = None
    name: str = ""
    raw: dict = field(default_factory=dict)

    def series(self, degree: int | None = None, m_max: int = 6) -> PerturbationSeries:
        """Exact Taylor truncation of every perturbation order."""
        degree = self.options["taylor_degree"] if degree is None else degree
        gs = [ex.taylor(vf, degree, constant_free=False) for vf in self.perturbation]
        for k, g in enumerate(gs, start=1):
            if not g.constant_free:
                raise ConfigError(f"perturbation order {k} does not vanish at the origin")
        return PerturbationSeries(self.A, gs, m_max=max(m_max, len(gs)))

    def compiled(self) -> list:
        return [ex.compile_field(vf) for vf in self.perturbation]

    def original_rhs(self, eps: float):
        """Numeric ``z' = Az + sum_k eps^k g_k(z)`` in diagonal coordinates."""
        lam = self.A.lam
        fs = self.compiled()

        def rhs(t, z):
            z = np.asarray(z, dtype=np.complex128)
            out = lam * z
            for k, f in enumerate(fs, start=1):
                out = out + eps ** k * f(z)
            return out

        return rhs

    def to_real(self, Z) -> np.ndarray:
        """Apply ``x = T z`` to states ``(N, n)``; identity without a real map."""
        if self.real_map is None:
            return Z
        return (self.real_map @ np.asarray(Z).T).T

    def from_real(self, x) -> np.ndarray:
        if self.real_map is None:
            return np.asarray(x, dtype=np.complex128)
        return np.linalg.solve(self.real_map, np.asarray(x, dtype=np.complex128))


def load(source) -> JobConfig:
    """Parse and validate a config from a path, JSON text or dict."""
    if isinstance(source, dict):
        data = source
    else:
        text = Path(source).read_text(encoding="utf-8") if not str(source).lstrip().startswith("{") \
            else str(source)
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"invalid JSON: {e}") from None
    try:
        jsonschema.validate(data, schema())
    except jsonschema.ValidationError as e:
        loc = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(f"schema violation at {loc}: {e.message}") from None
    dim = data["dim"]
    if len(data["lambda"]) != dim:
        raise ConfigError(f"lambda has {len(data['lambda'])} entries, dim is {dim}")
    A = DiagLinearPart([GaussianRational(pv.as_rational(re), pv.as_rational(im)) for re, im in data["lambda"]])
    params = dict(data.get("params", {}))
    moll = ex.MollifierSpec(**{k: (tuple(v) if k == "slopes" else v) for k, v in data.get("mollifier", {}).items()})
    pert = []
    for k, comps in enumerate(data["perturbation"], start=1):
        if len(comps) != dim:
            raise ConfigError(f"perturbation order {k} has {len(comps)} components, dim is {dim}")
        try:
            pert.append(ex.parse(list(comps), dim=dim, params=params, mollifier=moll))
        except (SyntaxError, ex.DimensionError) as e:
            raise ConfigError(f"perturbation order {k}: {e}") from None
    options: dict[str, Any] = {**DEFAULT_OPTIONS, **data.get("options", {})}
    order = data.get("order", 1)
    T = None
    if "real_map" in options:
        T = np.array([[_complex(v) for v in row] for row in options["real_map"]], dtype=np.complex128)
        if T.shape != (dim, dim):
            raise ConfigError(f"real_map must be {dim}x{dim}")
        if abs(np.linalg.det(T)) < 1e-12:
            raise ConfigError("real_map is singular")
    if "x0" in options and len(options["x0"]) != dim:
        raise ConfigError(f"x0 has {len(options['x0'])} entries, dim is {dim}")
    if options["t_span"][1] <= options["t_span"][0]:
        raise ConfigError("t_span must be increasing")
    if data["mode"] == "cinf" and order > 2:
        raise ConfigError("the averaging engine provides orders 1 and 2 only; use mode 'poly'")
    return JobConfig(dim=dim, A=A, mode=data["mode"], order=order, params=params, perturbation=pert,
                     mollifier=moll, options=options, real_map=T, name=data.get("name", ""), raw=data)
