"""Reliability fusion, learning-rate law, behavioural modes and the assumed
contraction bound on unreliability."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from .errors import ConfigError, DomainError

WEIGHT_TOL = 1e-12


class Mode(str, enum.Enum):
    AGILITY = "agility"
    SAFETY = "safety"
    NOMINAL = "nominal"


@dataclass(frozen=True)
class FusionWeights:
    w_I: float = 0.4
    w_O: float = 0.3
    w_M: float = 0.3

    def __post_init__(self):
        ws = (self.w_I, self.w_O, self.w_M)
        if any(not math.isfinite(w) or w < 0 for w in ws):
            raise ConfigError("fusion weights must be finite and >= 0")
        if abs(sum(ws) - 1.0) > WEIGHT_TOL:
            raise ConfigError(f"fusion weights must sum to 1 (got {sum(ws)!r})")

    def without(self, *channels: str) -> FusionWeights:
        """Drop the named channels ("I", "O", "M") and renormalise the rest."""
        kept = {c: getattr(self, f"w_{c}") for c in ("I", "O", "M")}
        for c in channels:
            if c not in kept:
                raise DomainError(f"unknown reflex channel {c!r}")
            kept[c] = 0.0
        total = sum(kept.values())
        if total <= 0:
            raise ConfigError("cannot drop every weighted reflex channel")
        # the last nonzero channel absorbs rounding so the sum is exactly 1
        names = [c for c in ("I", "O", "M") if kept[c] > 0]
        scaled = {c: kept[c] / total for c in ("I", "O", "M")}
        scaled[names[-1]] = 1.0 - sum(scaled[c] for c in names[:-1])
        return FusionWeights(scaled["I"], scaled["O"], scaled["M"])


@dataclass(frozen=True)
class ControllerConfig:
    eta0: float = 0.01
    delta: float = 0.5
    kappa: float = 1.0
    gamma: float = 0.1
    eps_bar: float = 0.005
    theta_act: float = 0.5
    theta_safe: float = 0.9
    weights: FusionWeights = field(default_factory=FusionWeights)

    def __post_init__(self):
        if not (math.isfinite(self.eta0) and self.eta0 > 0):
            raise ConfigError("eta0 must be > 0")
        if not 0.0 <= self.delta <= 1.0:
            raise ConfigError(f"delta must lie in [0, 1], got {self.delta!r}")
        if not (math.isfinite(self.kappa) and self.kappa > 0):
            raise ConfigError("kappa must be > 0")
        if not 0.0 < self.gamma <= 1.0:
            raise ConfigError(f"gamma must lie in (0, 1], got {self.gamma!r}")
        if not (math.isfinite(self.eps_bar) and self.eps_bar >= 0):
            raise ConfigError("eps_bar must be >= 0")
        if not 0.0 < self.theta_act <= 1.0:
            raise ConfigError(f"theta_act must lie in (0, 1], got {self.theta_act!r}")
        if not 0.0 < self.theta_safe < 1.0:
            raise ConfigError(f"theta_safe must lie in (0, 1), got {self.theta_safe!r}")
        if self.kappa * self.gamma < self.eps_bar:
            raise ConfigError("kappa * gamma must be >= eps_bar")


def _unit(name: str, x: float) -> None:
    if not (math.isfinite(x) and 0.0 <= x <= 1.0):
        raise DomainError(f"{name} must lie in [0, 1], got {x!r}")


def fuse(I: float, O: float, M: float, w: FusionWeights) -> float:
    """R = 1 - (w_I*I + w_O*O + w_M*(1 - M)).

    A complement of a convex combination, so R stays in [0, 1] and is
    1-Lipschitz in the 1-norm over (I, O, M).
    """
    _unit("I", I)
    _unit("O", O)
    _unit("M", M)
    r = 1.0 - (w.w_I * I + w.w_O * O + w.w_M * (1.0 - M))
    return min(1.0, max(0.0, r))


def learning_rate(R: float, cfg: ControllerConfig) -> float:
    _unit("R", R)
    if cfg.delta == 0.0:
        return cfg.eta0
    return cfg.eta0 * R ** cfg.delta


def classify_mode(R: float, I: float, cfg: ControllerConfig) -> Mode:
    _unit("R", R)
    _unit("I", I)
    if I >= cfg.theta_act:
        return Mode.AGILITY
    if R >= cfg.theta_safe:
        return Mode.SAFETY
    return Mode.NOMINAL


def is_intervention(I: float, O: float, cfg: ControllerConfig) -> bool:
    """A parent intervention: either the incident or overconfidence reflex fires."""
    return I >= cfg.theta_act or O >= cfg.theta_act


def contraction_bound(R: float, cfg: ControllerConfig) -> float:
    """Largest next-step unreliability admitted by the contraction assumption."""
    _unit("R", R)
    return (1.0 - cfg.gamma) * (1.0 - R) + cfg.eps_bar
