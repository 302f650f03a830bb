"""Run configuration shared by every CLI subcommand.

A config file is a flat JSON object whose keys are the field names of
:class:`RunConfig`. Unknown keys are rejected. Resolution order is
defaults < config file < command-line flags.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

from .model import AnnealSchedule, NoiseModel, PcaParams, PriorParams
from .synthesis import DEFAULT_GENERATION_SCHEDULE, MrfGenSpec


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    # lattice / generation
    width: int = 256
    height: int = 256
    levels: int = 5
    coupling: float = 1.0 / 3.0
    gen_beta0: float = DEFAULT_GENERATION_SCHEDULE.beta0
    gen_increment: float = DEFAULT_GENERATION_SCHEDULE.increment
    gen_period: int = DEFAULT_GENERATION_SCHEDULE.period
    gen_steps: int = DEFAULT_GENERATION_SCHEDULE.total_steps
    # noise
    sigma: float = 0.25
    # retrieval
    method: str = "pca"
    beta0: float = 1.25
    beta_increment: float = 0.25
    beta_period: int = 250
    steps: int = 1000
    q: Optional[float] = 0.51
    p: float = 0.0
    pca_kernel: str = "literal"
    threads: Optional[int] = None
    checkpoint_every: Optional[int] = None
    # paths
    input: Optional[str] = None
    output: Optional[str] = None
    trace: Optional[str] = None
    original: Optional[str] = None
    restored: Optional[str] = None
    noisy: Optional[str] = None
    json_out: Optional[str] = None
    image_id: Optional[str] = None
    force: bool = False
    # benchmark
    bench_threads: Optional[list] = None
    bench_repeats: int = 3

    def prior(self) -> PriorParams:
        return PriorParams(self.coupling)

    def noise(self) -> NoiseModel:
        return NoiseModel(self.sigma)

    def schedule(self) -> AnnealSchedule:
        return AnnealSchedule(self.beta0, self.beta_increment, self.beta_period, self.steps)

    def generation_schedule(self) -> AnnealSchedule:
        return AnnealSchedule(self.gen_beta0, self.gen_increment, self.gen_period, self.gen_steps)

    def pca_params(self) -> PcaParams:
        return PcaParams(self.q, self.p, balanced=self.pca_kernel == "balanced")

    def mrf_spec(self) -> MrfGenSpec:
        return MrfGenSpec((self.width, self.height), self.levels, self.coupling,
                          self.generation_schedule(), self.seed)


KNOWN_KEYS = frozenset(f.name for f in fields(RunConfig))
_INT_KEYS = {"seed", "width", "height", "levels", "gen_period", "gen_steps", "beta_period",
             "steps", "threads", "checkpoint_every", "bench_repeats"}
_FLOAT_KEYS = {"coupling", "gen_beta0", "gen_increment", "sigma", "beta0", "beta_increment",
               "q", "p"}


def _coerce(key: str, value: Any) -> Any:
    if value is None:
        return None
    if key in _INT_KEYS:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key} must be an integer, got {value!r}")
        return value
    if key in _FLOAT_KEYS:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key} must be a number, got {value!r}")
        return float(value)
    if key == "force":
        if not isinstance(value, bool):
            raise ConfigError(f"force must be true or false, got {value!r}")
        return value
    if key == "bench_threads":
        if not isinstance(value, list) or not all(isinstance(v, int) and v >= 1 for v in value):
            raise ConfigError("bench_threads must be a list of positive integers")
        return list(value)
    if not isinstance(value, str):
        raise ConfigError(f"{key} must be a string, got {value!r}")
    return value


def merge(base: RunConfig, overrides: Mapping[str, Any], skip_none: bool = False) -> RunConfig:
    unknown = set(overrides) - KNOWN_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    items = {k: _coerce(k, v) for k, v in overrides.items() if not (skip_none and v is None)}
    return replace(base, **items)


def load_file(path) -> Dict[str, Any]:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    return data


def resolve(config_path=None, flags: Optional[Mapping[str, Any]] = None) -> RunConfig:
    cfg = RunConfig()
    if config_path is not None:
        cfg = merge(cfg, load_file(config_path))
    if flags:
        cfg = merge(cfg, flags, skip_none=True)
    return cfg


def validate(cfg: RunConfig, command: str) -> RunConfig:
    """Check the numeric constraints relevant to ``command``."""
    try:
        if command == "generate":
            if cfg.levels < 2:
                raise ConfigError(f"levels must be >= 2, got {cfg.levels}")
            if cfg.levels > 65536:
                raise ConfigError("levels above 65536 cannot be stored as PGM")
            cfg.mrf_spec()
        if command in ("degrade", "denoise", "bench"):
            cfg.noise()
        if command in ("denoise", "bench"):
            cfg.prior()
            cfg.schedule()
            if cfg.method not in ("gibbs", "pca"):
                raise ConfigError(f"method must be 'gibbs' or 'pca', got {cfg.method!r}")
            if cfg.method == "pca" or command == "bench":
                if cfg.q is None:
                    raise ConfigError("method 'pca' requires the inertia q")
                if cfg.p != 0:
                    raise ConfigError("only the p = 0 inertial norm is supported")
                if cfg.pca_kernel not in ("balanced", "literal"):
                    raise ConfigError(
                        f"pca_kernel must be 'balanced' or 'literal', got {cfg.pca_kernel!r}")
                cfg.pca_params()
            if cfg.checkpoint_every is not None and cfg.checkpoint_every < 1:
                raise ConfigError("checkpoint_every must be positive")
        if cfg.threads is not None and cfg.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {cfg.threads}")
        if cfg.width < 1 or cfg.height < 1:
            raise ConfigError("width and height must be positive")
        if cfg.bench_repeats < 1:
            raise ConfigError("bench_repeats must be positive")
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg
