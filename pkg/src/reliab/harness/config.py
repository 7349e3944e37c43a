"""Experiment configuration: a JSON document mapped onto frozen dataclasses.

Every section is optional; omitted keys take the defaults below and unknown
keys are rejected. See ``README.md`` for the full schema.
"""
from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from ..controller import ControllerConfig, FusionWeights
from ..errors import ConfigError, ReliabError
from ..learner.perturb import PerturbationSpec

OUTPUT_DIR_ENV = "RELIAB_OUTPUT_DIR"

ABLATIONS = ("full", "no_incident", "no_overconfidence", "no_memory", "plain")
ABLATION_DROPS = {"no_incident": "I", "no_overconfidence": "O", "no_memory": "M"}


@dataclass(frozen=True)
class DatasetConfig:
    kind: str = "blobs"
    # blobs
    n: int = 1000
    d: int = 8
    n_classes: int = 4
    spread: float = 2.0
    center_scale: float = 1.5
    seed: int | None = None
    test_fraction: float = 0.2
    # idx
    train_images: str | None = None
    train_labels: str | None = None
    test_images: str | None = None
    test_labels: str | None = None
    limit: int | None = None
    test_limit: int | None = None

    def __post_init__(self):
        if self.kind not in ("blobs", "idx"):
            raise ConfigError(f"dataset.kind must be 'blobs' or 'idx', got {self.kind!r}")
        if self.kind == "blobs":
            if self.n < 4 or self.d < 1 or self.n_classes < 2:
                raise ConfigError("dataset: need n >= 4, d >= 1, n_classes >= 2")
            if self.spread < 0 or self.center_scale < 0:
                raise ConfigError("dataset: spread and center_scale must be >= 0")
            if not 0.0 < self.test_fraction < 1.0:
                raise ConfigError("dataset.test_fraction must lie in (0, 1)")
        elif not (self.train_images and self.train_labels):
            raise ConfigError("dataset: idx needs train_images and train_labels")


@dataclass(frozen=True)
class ReflexConfig:
    beta: float = 0.9
    calib_window: int = 50
    memory_init: float = 0.5
    rho_up: float = 0.02
    rho_down: float = 0.1

    def __post_init__(self):
        if not 0.0 < self.beta < 1.0:
            raise ConfigError("reflexes.beta must lie in (0, 1)")
        if self.calib_window < 1:
            raise ConfigError("reflexes.calib_window must be >= 1")
        if not 0.0 <= self.memory_init <= 1.0:
            raise ConfigError("reflexes.memory_init must lie in [0, 1]")
        if not (0.0 < self.rho_up <= 1.0 and 0.0 < self.rho_down <= 1.0):
            raise ConfigError("reflexes.rho_up and rho_down must lie in (0, 1]")


@dataclass(frozen=True)
class MetricsConfig:
    n_bins: int = 15
    w_var: int = 25
    sustain: int = 10
    composure_window: int = 50

    def __post_init__(self):
        if min(self.n_bins, self.w_var, self.sustain, self.composure_window) < 1:
            raise ConfigError("metrics: n_bins, w_var, sustain, composure_window must be >= 1")


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    hidden: tuple[int, ...] | None = None
    optimizer: str = "adam"
    epochs: int = 10
    batch_size: int = 64
    shuffle: bool = True
    seed: int = 0
    seeds: tuple[int, ...] = (0, 1, 2)
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    reflexes: ReflexConfig = field(default_factory=ReflexConfig)
    metrics: MetricsConfig = field(default_factory=MetricsConfig)
    ablation: str = "full"
    perturbation: PerturbationSpec | None = None
    output_dir: str = "runs/default"

    def __post_init__(self):
        if self.optimizer not in ("sgd", "adam", "adabound"):
            raise ConfigError(f"optimizer must be sgd, adam or adabound, got {self.optimizer!r}")
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch_size must be >= 1")
        if not self.seeds:
            raise ConfigError("seeds must name at least one seed")
        if self.ablation not in ABLATIONS:
            raise ConfigError(f"ablation must be one of {ABLATIONS}, got {self.ablation!r}")
        if self.hidden is not None and any(h < 1 for h in self.hidden):
            raise ConfigError("hidden layer widths must be >= 1")

    @property
    def hidden_layers(self) -> tuple[int, ...]:
        if self.hidden is not None:
            return tuple(self.hidden)
        return (64,) if self.dataset.kind == "idx" else (32,)

    def with_(self, **changes) -> ExperimentConfig:
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["hidden"] = list(self.hidden_layers)
        d["seeds"] = list(self.seeds)
        w = self.controller.weights
        d["controller"]["weights"] = [w.w_I, w.w_O, w.w_M]
        return d


def _build(cls, raw, section: str, convert=None):
    if raw is None:
        return cls()
    if not isinstance(raw, dict):
        raise ConfigError(f"{section} must be a JSON object")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(raw) - names)
    if unknown:
        raise ConfigError(f"unknown key(s) in {section}: {', '.join(unknown)}")
    kwargs = dict(raw)
    if convert:
        kwargs = convert(kwargs)
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError, ReliabError) as exc:
        raise ConfigError(f"{section}: {exc}") from exc


def _weights(raw) -> FusionWeights:
    if isinstance(raw, (list, tuple)):
        if len(raw) != 3:
            raise ConfigError("controller.weights must list exactly three values [w_I, w_O, w_M]")
        return FusionWeights(*map(float, raw))
    return _build(FusionWeights, raw, "controller.weights")


def _controller(kw):
    if "weights" in kw:
        kw["weights"] = _weights(kw["weights"])
    return kw


def config_from_dict(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a JSON object")
    names = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = sorted(set(raw) - names)
    if unknown:
        raise ConfigError(f"unknown key(s) in config: {', '.join(unknown)}")
    kw = dict(raw)
    kw["dataset"] = _build(DatasetConfig, raw.get("dataset"), "dataset")
    kw["controller"] = _build(ControllerConfig, raw.get("controller"), "controller", _controller)
    kw["reflexes"] = _build(ReflexConfig, raw.get("reflexes"), "reflexes")
    kw["metrics"] = _build(MetricsConfig, raw.get("metrics"), "metrics")
    pert = raw.get("perturbation")
    kw["perturbation"] = None if pert is None else _build(PerturbationSpec, pert, "perturbation")
    if raw.get("hidden") is not None:
        kw["hidden"] = tuple(int(h) for h in raw["hidden"])
    if "seeds" in raw:
        kw["seeds"] = tuple(int(s) for s in raw["seeds"])
    try:
        return ExperimentConfig(**kw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def parse_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
    cfg = config_from_dict(raw)
    override = os.environ.get(OUTPUT_DIR_ENV)
    if override:
        cfg = cfg.with_(output_dir=override)
    return cfg
