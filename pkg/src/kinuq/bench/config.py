"""Experiment configuration: a flat dataclass with YAML round-trip."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from ..errors import ConfigError

CASES = ("sod", "blast", "sod_uncertain", "mixed_a", "mixed_b", "mixed_c", "custom")
SOLVERS = ("full_kinetic", "full_fluid", "hybrid")
ESTIMATORS = ("none", "mc", "mlmc", "bifi", "trifi")


@dataclass
class ExperimentConfig:
    case: str = "sod"
    solver: str = "hybrid"
    estimator: str = "none"

    # discretisation; n_x/dt of None resolve to desk- or paper-scale defaults
    n_x: int | None = None
    n_v: int = 32
    l_max: float = 8.0
    cfl: float = 0.64            # dt = cfl * dx / l_max unless dt given
    dt: float | None = None
    t_final: float | None = None
    paper_scale: bool = False

    # physics
    eps: float | None = None     # constant Knudsen number; None = case default
    eps0: float = 1e-3           # floor of the mixed-regime profile
    b: float = 1.0
    gamma: float = 0.0
    n_angular: int = 16
    n_radial: int = 16
    beta0: float = 4.0
    eta0: float = 1e-2
    delta0: float = 1e-4
    mu: float = 1.0
    kappa: float = 1.0

    # sampling / estimators
    seed: int = 0
    samples: int = 32
    levels: list = field(default_factory=list)   # [{n_x, samples}, ...]
    k_values: list = field(default_factory=lambda: [3, 5, 10])
    n_low: int = 100
    n_heldout: int = 20
    reference_nx: int = 400
    reference_samples: int = 256
    reference_solver: str = "full_kinetic"

    # orchestration
    workers: int = 1
    out_dir: str = "out"
    label_history: bool = False

    def __post_init__(self):
        if self.case not in CASES:
            raise ConfigError(f"unknown case {self.case!r}; expected one of {CASES}")
        if self.solver not in SOLVERS:
            raise ConfigError(f"unknown solver {self.solver!r}")
        if self.estimator not in ESTIMATORS:
            raise ConfigError(f"unknown estimator {self.estimator!r}")
        for name in ("n_v", "samples", "n_low", "n_heldout", "workers"):
            if getattr(self, name) is not None and getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        for name in ("l_max", "cfl", "b", "eta0", "delta0", "mu", "kappa", "beta0"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.dt is not None and self.dt <= 0:
            raise ConfigError("dt must be positive")

    @property
    def resolved_nx(self) -> int:
        if self.n_x is not None:
            return self.n_x
        return 100 if self.paper_scale else 50

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_yaml(self, path) -> None:
        Path(path).write_text(yaml.safe_dump(self.to_dict(), sort_keys=True))

    def content_hash(self) -> str:
        payload = self.to_dict()
        for key in ("out_dir", "workers"):   # where/how, not what
            payload.pop(key, None)
        blob = json.dumps(payload, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def load_config(path) -> ExperimentConfig:
    raw = yaml.safe_load(Path(path).read_text())
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} did not parse to a mapping")
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return ExperimentConfig(**raw)
