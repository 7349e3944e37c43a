"""Perturbations injected mid-run to exercise recovery measurement."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from .data import Dataset

KINDS = ("label_noise", "gradient_spike", "input_noise")


@dataclass(frozen=True)
class PerturbationSpec:
    kind: str
    at_step: int
    p: float = 0.0
    scale: float = 1.0
    duration: int = 1
    sigma: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"perturbation kind must be one of {KINDS}, got {self.kind!r}")
        if self.at_step < 0:
            raise ConfigError("perturbation at_step must be >= 0")
        if self.kind == "label_noise" and not 0.0 <= self.p <= 1.0:
            raise ConfigError("label_noise p must lie in [0, 1]")
        if self.kind == "gradient_spike":
            if self.scale < 1.0:
                raise ConfigError("gradient_spike scale must be >= 1")
            if self.duration < 1:
                raise ConfigError("gradient_spike duration must be >= 1")
        if self.kind == "input_noise" and self.sigma < 0:
            raise ConfigError("input_noise sigma must be >= 0")

    def active(self, step: int) -> bool:
        if self.kind == "gradient_spike":
            return self.at_step <= step < self.at_step + self.duration
        return step == self.at_step


def resample_labels(ds: Dataset, p: float, rng: np.random.Generator) -> Dataset:
    """Redraw the labels of a fraction ``p`` of rows uniformly over all classes."""
    out = ds.copy()
    k = int(round(p * len(ds)))
    if k == 0:
        return out
    idx = rng.choice(len(ds), size=k, replace=False)
    out.labels[idx] = rng.integers(0, ds.n_classes, size=k)
    return out


def add_input_noise(ds: Dataset, sigma: float, rng: np.random.Generator) -> Dataset:
    out = ds.copy()
    if sigma > 0:
        out.inputs += rng.normal(0.0, sigma, size=out.inputs.shape)
    return out


def spike_gradients(grads, scale: float):
    if scale == 1.0:
        return grads
    return [g * scale for g in grads]


def apply_perturbation(spec: PerturbationSpec, step: int, train: Dataset, grads,
                       rng: np.random.Generator):
    """Apply ``spec`` at ``step``; returns the (possibly replaced) dataset and gradients.

    Dataset perturbations fire once at ``at_step`` and persist; gradient spikes
    scale every gradient inside their window.
    """
    if not spec.active(step):
        return train, grads
    if spec.kind == "label_noise":
        return resample_labels(train, spec.p, rng), grads
    if spec.kind == "input_noise":
        return add_input_noise(train, spec.sigma, rng), grads
    return train, spike_gradients(grads, spec.scale)
