"""Experiment configuration.

Precedence, lowest first: built-in defaults, the JSON config file, command
line flags.  Unknown keys in the config file are rejected so typos surface.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from ..errors import ConfigError
from ..metastability.audit import AuditBudget

EXPERIMENTS = ("conductance-sweep", "gap-sweep", "hitting-times", "verify-assumptions",
               "cheeger-audit")

DEFAULT_SIGMAS = {
    "conductance-sweep": (0.5, 0.4, 0.3, 0.25, 0.2),
    "gap-sweep": (0.4, 0.3, 0.25),
    "hitting-times": (0.35, 0.3, 0.25),
    "verify-assumptions": (0.3,),
    "cheeger-audit": (0.4, 0.3, 0.25),
}

DEFAULT_TOLERANCES = {
    "quad_rtol": 1e-10,
    "eig_tol": 1e-11,
    "cheeger_slack": 1e-9,
    "grid_tol": 1e-4,
    "ratio_median_lo": 0.8,
    "ratio_median_hi": 1.2,
    "ratio_epsilon": 0.3,
    "ratio_max_fraction": 0.1,
    "gap_ratio_lo": 0.85,
    "gap_ratio_hi": 1.15,
}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    sigmas: tuple[float, ...] = ()
    seed: int = 20240611
    replicas: int = 200
    grid_n: int | None = None
    tolerances: dict = field(default_factory=dict)
    output_dir: str = "results"
    format: str = "csv"
    #: two-mode partition knobs, or an explicit list of modes
    regions: dict = field(default_factory=dict)
    start: float = -1.0
    cap: int | None = None
    #: stationary draws per replica in the Monte-Carlo conductance
    mc_batch: int = 5000
    refine: bool = True
    timings: bool = False
    budget: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}")
        sigmas = tuple(float(s) for s in (self.sigmas or DEFAULT_SIGMAS[self.experiment]))
        if not sigmas or not all(math.isfinite(s) and s > 0 for s in sigmas):
            raise ConfigError("sigmas must be a nonempty list of positive numbers")
        object.__setattr__(self, "sigmas", sigmas)
        if self.replicas < 0 or (self.replicas < 1 and self.experiment == "hitting-times"):
            raise ConfigError("replicas must be at least 1")
        if self.grid_n is not None and self.grid_n < 2:
            raise ConfigError("grid_n must be at least 2")
        if self.format not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        if self.mc_batch < 1:
            raise ConfigError("mc_batch must be positive")
        unknown = set(self.tolerances) - set(DEFAULT_TOLERANCES)
        if unknown:
            raise ConfigError(f"unknown tolerances {sorted(unknown)}")
        object.__setattr__(self, "tolerances", {**DEFAULT_TOLERANCES, **self.tolerances})
        names = {f.name for f in fields(AuditBudget)}
        if set(self.budget) - names:
            raise ConfigError(f"unknown budget fields {sorted(set(self.budget) - names)}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    def tol(self, name: str) -> float:
        return float(self.tolerances[name])

    def audit_budget(self) -> AuditBudget:
        b = dict(self.budget)
        if "sweep_factors" in b:
            b["sweep_factors"] = tuple(b["sweep_factors"])
        return AuditBudget(**b)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def load_config(path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    except json.JSONDecodeError as err:
        raise ConfigError(f"config {path} is not valid JSON: {err}") from err
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    allowed = {f.name for f in fields(ExperimentConfig)}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    return data


def build_config(experiment: str, file_data: dict | None = None, **overrides) -> ExperimentConfig:
    """Merge defaults, file contents and non-None overrides into a validated config."""
    data = dict(file_data or {})
    if data.get("experiment", experiment) != experiment:
        raise ConfigError(f"config is for {data['experiment']!r}, not {experiment!r}")
    data["experiment"] = experiment
    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ExperimentConfig(**data)
    except TypeError as err:
        raise ConfigError(str(err)) from err


def with_sigmas(config: ExperimentConfig, sigmas) -> ExperimentConfig:
    return replace(config, sigmas=tuple(sigmas))
