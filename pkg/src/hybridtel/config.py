"""Experiment configuration: JSON-backed, with dotted-path overrides."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .errors import ConfigError
from .protocol import ResourceSpec


@dataclass(frozen=True)
class SweepSpec:
    """Linear sweep of one scalar variable (endpoint excluded for phases)."""

    variable: str = "phi"
    start: float = 0.0
    stop: float = 2.0 * math.pi
    steps: int = 16
    include_stop: bool = False

    def values(self) -> list[float]:
        if self.steps < 1:
            raise ConfigError("sweep needs at least one step")
        if self.steps == 1:
            return [self.start]
        n = self.steps
        if self.include_stop:
            return [self.start + (self.stop - self.start) * i / (n - 1) for i in range(n)]
        return [self.start + (self.stop - self.start) * i / n for i in range(n)]


@dataclass(frozen=True)
class NoiseSpec:
    """Phase-noise model of the runner.

    theta_c_width:
        Spread of the unstabilized resource phase, drawn zero-mean Gaussian
        per heralded event.  ``theta_c_width_kind`` selects whether the number
        is the Gaussian sigma or a mean absolute deviation (then
        sigma = width * sqrt(pi/2)).
    phase_diff_sigma:
        Gaussian sigma of the statistical error on the estimated phase
        difference between the two resource modes.
    """

    theta_c_width: float = 0.53
    theta_c_width_kind: str = "sigma"  # or "mean_abs_deviation"
    phase_diff_sigma: float = 0.5

    def theta_c_sigma(self) -> float:
        if self.theta_c_width_kind == "sigma":
            return self.theta_c_width
        if self.theta_c_width_kind == "mean_abs_deviation":
            return self.theta_c_width * math.sqrt(math.pi / 2.0)
        raise ConfigError(
            f"theta_c_width_kind must be 'sigma' or 'mean_abs_deviation', "
            f"got {self.theta_c_width_kind!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a runner needs: protocol parameters, sweep, noise, seed, outputs."""

    resource: ResourceSpec = field(default_factory=ResourceSpec)
    input_alpha: float | None = None     # defaults to the resource amplitude
    dim_input: int = 15
    spcm2_eta: float = 0.1
    eta_homodyne: float = 0.54
    bell_projection: str = "click"       # or "ideal"
    sweep: SweepSpec = field(default_factory=SweepSpec)
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    trials: int = 200
    samples: int = 500_000
    tomography_dim: int = 4
    rng_seed: int | None = None
    out_dir: str = "out"

    def __post_init__(self):
        for name, eta in (("spcm2_eta", self.spcm2_eta), ("eta_homodyne", self.eta_homodyne)):
            if not 0.0 < eta <= 1.0:
                raise ConfigError(f"{name} must be in (0, 1], got {eta}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.bell_projection not in ("click", "ideal"):
            raise ConfigError("bell_projection must be 'click' or 'ideal'")

    @property
    def alpha(self) -> float:
        if self.input_alpha is not None:
            return self.input_alpha
        if self.resource.kind == "ideal":
            return self.resource.alpha
        return math.sqrt(self.resource.zeta)

    def require_seed(self) -> int:
        if self.rng_seed is None:
            raise ConfigError("rng_seed is mandatory for stochastic runs")
        return int(self.rng_seed)

    def to_dict(self) -> dict:
        return asdict(self)


def _build(cls, data: dict, context: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{context}: expected an object, got {type(data).__name__}")
    fields = {f.name for f in cls.__dataclass_fields__.values()}  # type: ignore[attr-defined]
    unknown = set(data) - fields
    if unknown:
        raise ConfigError(f"{context}: unknown keys {sorted(unknown)}")
    return cls(**data)


def config_from_dict(data: dict) -> ExperimentConfig:
    data = dict(data)
    kwargs = {}
    if "resource" in data:
        kwargs["resource"] = _build(ResourceSpec, data.pop("resource"), "resource")
    if "sweep" in data:
        kwargs["sweep"] = _build(SweepSpec, data.pop("sweep"), "sweep")
    if "noise" in data:
        kwargs["noise"] = _build(NoiseSpec, data.pop("noise"), "noise")
    cfg = _build(ExperimentConfig, data, "config")
    return replace(cfg, **kwargs) if kwargs else cfg


def load_config(path: str | Path) -> ExperimentConfig:
    with open(path) as fh:
        return config_from_dict(json.load(fh))


def _parse_scalar(text: str):
    lowered = text.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    if lowered in ("null", "none"):
        return None
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def apply_overrides(config: ExperimentConfig, overrides: list[str]) -> ExperimentConfig:
    """Apply ``key=value`` overrides with dotted paths (e.g. noise.phase_diff_sigma=0)."""
    data = config.to_dict()
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        target = data
        parts = key.strip().split(".")
        for part in parts[:-1]:
            if part not in target or not isinstance(target[part], dict):
                raise ConfigError(f"unknown override path {key!r}")
            target = target[part]
        if parts[-1] not in target:
            raise ConfigError(f"unknown override key {key!r}")
        target[parts[-1]] = _parse_scalar(raw.strip())
    return config_from_dict(data)
