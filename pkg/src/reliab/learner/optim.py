"""SGD, Adam and AdaBound with an externally supplied step size.

Every ``step`` call takes the step size for that iteration and returns the
effective search direction ``g`` such that the parameter update equals
``-eta * g``. The stability monitor audits that direction.
"""
from __future__ import annotations

import math

import numpy as np

from ..errors import DomainError, TrainingFault


def _check(grads, eta):
    if not (math.isfinite(eta) and eta >= 0):
        raise DomainError(f"step size must be finite and >= 0, got {eta!r}")
    for g in grads:
        if not np.all(np.isfinite(g)):
            raise TrainingFault("non-finite gradient")


class SGD:
    name = "sgd"

    def __init__(self):
        self.t = 0

    def state_dict(self) -> dict:
        return {"t": self.t}

    def step(self, params, grads, eta: float):
        _check(grads, eta)
        self.t += 1
        directions = [np.array(g, dtype=np.float64) for g in grads]
        if eta > 0:
            for p, d in zip(params, directions):
                p -= eta * d
        return directions


class Adam:
    name = "adam"

    def __init__(self, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.m: list[np.ndarray] | None = None
        self.v: list[np.ndarray] | None = None

    def state_dict(self) -> dict:
        return {"t": self.t, "m": self.m, "v": self.v}

    def _moments(self, grads):
        if self.m is None:
            self.m = [np.zeros_like(g, dtype=np.float64) for g in grads]
            self.v = [np.zeros_like(g, dtype=np.float64) for g in grads]
        self.t += 1
        for m, v, g in zip(self.m, self.v, grads):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
        return 1.0 - self.beta1 ** self.t, 1.0 - self.beta2 ** self.t

    def step(self, params, grads, eta: float):
        _check(grads, eta)
        bc1, bc2 = self._moments(grads)
        directions = []
        for p, m, v in zip(params, self.m, self.v):
            d = (m / bc1) / (np.sqrt(v / bc2) + self.eps)
            directions.append(d)
            if eta > 0:
                p -= eta * d
        return directions


class AdaBound:
    """Adam whose per-coordinate step is clipped into a band converging to SGD.

    ``eta`` plays the role of the base rate; the band converges to
    ``final_ratio * eta`` with width shrinking like ``1 / (gamma * t)``.
    """

    name = "adabound"

    def __init__(self, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8,
                 final_ratio: float = 0.1, gamma: float = 1e-3):
        self._adam = Adam(beta1, beta2, eps)
        self.final_ratio = final_ratio
        self.gamma = gamma

    @property
    def t(self) -> int:
        return self._adam.t

    def state_dict(self) -> dict:
        return self._adam.state_dict()

    def bounds(self, eta: float, t: int) -> tuple[float, float]:
        final = self.final_ratio * eta
        return (final * (1.0 - 1.0 / (self.gamma * t + 1.0)),
                final * (1.0 + 1.0 / (self.gamma * t)))

    def step(self, params, grads, eta: float):
        _check(grads, eta)
        bc1, bc2 = self._adam._moments(grads)
        t = self._adam.t
        eps = self._adam.eps
        directions = []
        if eta > 0:
            lower, upper = self.bounds(eta, t)
            base = eta * math.sqrt(bc2) / bc1
            for p, m, v in zip(params, self._adam.m, self._adam.v):
                rate = np.clip(base / (np.sqrt(v) + eps), lower, upper)
                update = rate * m
                directions.append(update / eta)
                p -= update
        else:
            for m, v in zip(self._adam.m, self._adam.v):
                directions.append((m / bc1) / (np.sqrt(v / bc2) + eps))
        return directions


OPTIMIZERS = {"sgd": SGD, "adam": Adam, "adabound": AdaBound}


def make_optimizer(name: str):
    try:
        return OPTIMIZERS[name.lower()]()
    except KeyError:
        raise DomainError(f"unknown optimizer {name!r}; choose from {sorted(OPTIMIZERS)}") from None
