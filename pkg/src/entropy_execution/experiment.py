"""JSON experiment configurations and the stress-test presets.

A configuration is one JSON document::

    {
      "model": 1,
      "params": {"gamma": ..., "gamma_M": ..., ...},
      "prior": {"mean": {"const": 0.0}, "precision": {"const": 1e-8}},
      "risk": {"r_xx": ..., "r_xa": ..., "r_aa": ...},
      "sim": {"n_paths": 4096, "n_steps": 1000, "seed": 0, ...},
      "strategies": ["optimal", "twap"],
      "solver_steps": 1000
    }

Schedules are ``{"const": value}``, ``{"linear": {"a": a, "b": b}}``
(``a + b t``) or a bare number.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from .errors import ConfigError
from .model_config import (
    Coefficient,
    LinearSchedule,
    ModelParams,
    PriorSchedule,
    RiskSpecModel1,
    RiskSpecModel2,
)
from .simulator import SimConfig

SCHEMA_VERSION = 1

PARAM_FIELDS = ("gamma", "gamma_M", "eta", "delta", "beta", "sigma_S", "sigma_X", "rho", "horizon", "x0", "s0")
RISK_FIELDS = {1: ("r_xx", "r_xa", "r_aa"), 2: ("r_vv", "r_va", "r_aa")}
SIM_DEFAULTS = {
    "n_paths": 4096,
    "n_steps": 1000,
    "seed": 0,
    "antithetic": False,
    "sample_market_rate": False,
    "quadratic_variation": "realized",
}
STRATEGIES = ("optimal", "twap")


def _parse_schedule(value, path: str) -> Coefficient:
    if isinstance(value, bool):
        raise ConfigError(path, "expected a number or schedule object")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, dict) and len(value) == 1:
        if "const" in value:
            return _parse_number(value["const"], f"{path}.const")
        if "linear" in value:
            lin = value["linear"]
            if not isinstance(lin, dict) or set(lin) != {"a", "b"}:
                raise ConfigError(f"{path}.linear", "expected an object with keys 'a' and 'b'")
            a = _parse_number(lin["a"], f"{path}.linear.a")
            b = _parse_number(lin["b"], f"{path}.linear.b")
            return a if b == 0 else LinearSchedule(a, b)
    raise ConfigError(path, "expected a number, {'const': v} or {'linear': {'a': a, 'b': b}}")


def _parse_number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {value!r}")
    return float(value)


def _dump_schedule(value: Coefficient):
    if isinstance(value, LinearSchedule):
        return {"linear": {"a": value.a, "b": value.b}}
    return {"const": float(value)}


@dataclass
class ExperimentConfig:
    """Fully explicit experiment description."""

    model: int
    params: ModelParams
    prior: PriorSchedule
    risk: Any
    sim: Dict[str, Any] = field(default_factory=lambda: dict(SIM_DEFAULTS))
    strategies: List[str] = field(default_factory=lambda: list(STRATEGIES))
    solver_steps: int = 1000
    preset: Optional[str] = None

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("$", "configuration must be a JSON object")
        model = data.get("model")
        if model not in (1, 2):
            raise ConfigError("model", "must be 1 or 2")

        raw = data.get("params")
        if not isinstance(raw, dict):
            raise ConfigError("params", "missing or not an object")
        unknown = set(raw) - set(PARAM_FIELDS)
        if unknown:
            raise ConfigError(f"params.{sorted(unknown)[0]}", "unknown field")
        values = {}
        for name in PARAM_FIELDS:
            if name not in raw:
                raise ConfigError(f"params.{name}", "missing")
            values[name] = _parse_number(raw[name], f"params.{name}")
        try:
            params = ModelParams(**values)
        except ValueError as exc:
            raise ConfigError("params", str(exc)) from exc

        prior_raw = data.get("prior")
        if not isinstance(prior_raw, dict) or set(prior_raw) != {"mean", "precision"}:
            raise ConfigError("prior", "expected an object with 'mean' and 'precision'")
        prior = PriorSchedule(_parse_schedule(prior_raw["mean"], "prior.mean"),
                              _parse_schedule(prior_raw["precision"], "prior.precision"))

        risk_raw = data.get("risk")
        names = RISK_FIELDS[model]
        if not isinstance(risk_raw, dict) or set(risk_raw) != set(names):
            raise ConfigError("risk", f"model {model} expects exactly the fields {', '.join(names)}")
        coeffs = [_parse_schedule(risk_raw[n], f"risk.{n}") for n in names]
        risk = RiskSpecModel1(*coeffs) if model == 1 else RiskSpecModel2(*coeffs)

        sim = dict(SIM_DEFAULTS)
        sim_raw = data.get("sim", {})
        if not isinstance(sim_raw, dict):
            raise ConfigError("sim", "must be an object")
        for key, value in sim_raw.items():
            if key not in SIM_DEFAULTS:
                raise ConfigError(f"sim.{key}", "unknown field")
            sim[key] = value
        for key in ("n_paths", "n_steps", "seed"):
            if isinstance(sim[key], bool) or not isinstance(sim[key], int):
                raise ConfigError(f"sim.{key}", "must be an integer")
        for key in ("antithetic", "sample_market_rate"):
            if not isinstance(sim[key], bool):
                raise ConfigError(f"sim.{key}", "must be true or false")

        strategies = data.get("strategies", list(STRATEGIES))
        if (not isinstance(strategies, list) or not strategies
                or any(s not in STRATEGIES for s in strategies) or len(set(strategies)) != len(strategies)):
            raise ConfigError("strategies", f"must be a non-empty list drawn from {list(STRATEGIES)}")
        solver_steps = data.get("solver_steps", 1000)
        if isinstance(solver_steps, bool) or not isinstance(solver_steps, int) or solver_steps < 10:
            raise ConfigError("solver_steps", "must be an integer >= 10")
        preset = data.get("preset")
        cfg = cls(model=model, params=params, prior=prior, risk=risk, sim=sim,
                  strategies=list(strategies), solver_steps=solver_steps, preset=preset)
        cfg.sim_config()  # validates the simulation settings
        return cfg

    def to_dict(self) -> Dict[str, Any]:
        names = RISK_FIELDS[self.model]
        return {
            "schema_version": SCHEMA_VERSION,
            "preset": self.preset,
            "model": self.model,
            "params": {n: getattr(self.params, n) for n in PARAM_FIELDS},
            "prior": {"mean": _dump_schedule(self.prior.mean_fn),
                      "precision": _dump_schedule(self.prior.precision_fn)},
            "risk": {n: _dump_schedule(getattr(self.risk, n)) for n in names},
            "sim": dict(self.sim),
            "strategies": list(self.strategies),
            "solver_steps": self.solver_steps,
        }

    def with_overrides(self, seed=None, paths=None, steps=None) -> "ExperimentConfig":
        cfg = copy.deepcopy(self)
        if seed is not None:
            cfg.sim["seed"] = int(seed)
        if paths is not None:
            cfg.sim["n_paths"] = int(paths)
        if steps is not None:
            cfg.sim["n_steps"] = int(steps)
        cfg.sim_config()
        return cfg

    def sim_config(self, **changes) -> SimConfig:
        sim = {**self.sim, **changes}
        try:
            return SimConfig(model=self.model, params=self.params, prior=self.prior, risk=self.risk, **sim)
        except ValueError as exc:
            raise ConfigError("sim", str(exc)) from exc


# --------------------------------------------------------------------------- presets

COMMON_PARAMS = {
    "gamma": 2.5e-7,
    "beta": 1.0,
    "sigma_S": 10.0,
    "sigma_X": 1e5,
    "rho": 0.3,
    "horizon": 1.0,
    "x0": 1e6,
    "s0": 100.0,
}
BENCHMARK = {"gamma_M": 2.5e-6, "eta": 2.5e-6, "delta": 1.25e-4}
PRESET_SEED = 0

# scenario name -> (impact/penalty overrides, R_xx or R_vv)
_SCENARIOS = {
    "benchmark": ({}, -1e-6),
    "large-gammaM": ({"gamma_M": 1e-5}, -1e-6),
    "large-eta-small-delta": ({"eta": 1e-3, "delta": 2e-4}, -1e-6),
}
STRESS_TABLES = {
    1: ["m1-benchmark", "m1-large-gammaM", "m1-large-eta-small-delta", "m1-large-Rxx"],
    2: ["m2-benchmark", "m2-large-gammaM", "m2-large-eta-small-delta", "m2-large-Rvv"],
}


def _preset_dict(model: int, overrides: Dict[str, float], r_diag: float, name: str) -> Dict[str, Any]:
    params = {**COMMON_PARAMS, **BENCHMARK, **overrides}
    if model == 1:
        risk = {"r_xx": r_diag, "r_xa": -5e-6, "r_aa": 9e-7}
    else:
        risk = {"r_vv": r_diag, "r_va": 5e-6, "r_aa": 9e-7}
    return {
        "preset": name,
        "model": model,
        "params": params,
        "prior": {"mean": {"const": 0.0}, "precision": {"const": 1e-8}},
        "risk": {k: {"const": v} for k, v in risk.items()},
        "sim": {**SIM_DEFAULTS, "seed": PRESET_SEED},
        "strategies": list(STRATEGIES),
        "solver_steps": 1000,
    }


def preset_names() -> List[str]:
    return [n for table in STRESS_TABLES.values() for n in table]


def preset(name: str) -> ExperimentConfig:
    """Expanded configuration for a named preset such as ``"m1-benchmark"``."""
    if name not in preset_names():
        raise ConfigError("preset", f"unknown preset {name!r}; choose from {preset_names()}")
    model = int(name[1])
    scenario = name[3:]
    if scenario in ("large-Rxx", "large-Rvv"):
        overrides, r_diag = {}, -1e-4
    else:
        overrides, r_diag = _SCENARIOS[scenario]
    return ExperimentConfig.from_dict(_preset_dict(model, overrides, r_diag, name))
