"""Streaming reflex signals: incident, overconfidence and memory.

All three outputs live in [0, 1]. The estimator owns its own memory
(previous loss, EMA of absolute loss change, calibration window, recovery
credit) and is mutated in place by one training run.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

from .errors import InvalidObservationError

EPS_NUM = 1e-8


@dataclass(frozen=True)
class StepObservation:
    step: int
    loss: float
    mean_confidence: float
    batch_accuracy: float
    grad_norm: float

    def __post_init__(self):
        for name in ("loss", "mean_confidence", "batch_accuracy", "grad_norm"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidObservationError(f"{name} is not finite")
        if self.step < 0:
            raise InvalidObservationError("step must be nonnegative")
        if self.loss < 0 or self.grad_norm < 0:
            raise InvalidObservationError("loss and grad_norm must be >= 0")
        for name in ("mean_confidence", "batch_accuracy"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise InvalidObservationError(f"{name} must lie in [0, 1]")


@dataclass
class ReflexEstimatorState:
    """Estimator memory behind the three reflexes.

    ``n_deltas`` counts observed loss differences. The first difference seeds
    the EMA instead of being scored against an empty one, which would make
    any early uptick read as a maximal incident.
    """

    ema_decay: float = 0.9
    calib_capacity: int = 50
    recovery_credit: float = 0.5
    rho_up: float = 0.02
    rho_down: float = 0.1
    prev_loss: float | None = None
    ema_abs_delta: float = 0.0
    n_deltas: int = 0
    calib_window: deque = field(default=None, repr=False)  # type: ignore[assignment]

    def __post_init__(self):
        if not 0.0 < self.ema_decay < 1.0:
            raise InvalidObservationError("ema_decay must lie in (0, 1)")
        if self.calib_capacity < 1:
            raise InvalidObservationError("calib_capacity must be >= 1")
        if not 0.0 <= self.recovery_credit <= 1.0:
            raise InvalidObservationError("recovery_credit must lie in [0, 1]")
        if not (0.0 < self.rho_up <= 1.0 and 0.0 < self.rho_down <= 1.0):
            raise InvalidObservationError("rho_up and rho_down must lie in (0, 1]")
        if self.ema_abs_delta < 0:
            raise InvalidObservationError("ema_abs_delta must be >= 0")
        if self.calib_window is None:
            self.calib_window = deque(maxlen=self.calib_capacity)
        elif not isinstance(self.calib_window, deque) or self.calib_window.maxlen != self.calib_capacity:
            self.calib_window = deque(self.calib_window, maxlen=self.calib_capacity)
        if self.prev_loss is not None and self.n_deltas == 0 and self.ema_abs_delta > 0:
            # caller supplied a warmed-up EMA explicitly
            self.n_deltas = 1


def incident_reflex(state: ReflexEstimatorState, loss: float) -> float:
    """Squashed, EMA-normalised positive loss change.

    ``x = max(0, L_t - L_{t-1}) / (ema + eps)`` and the reflex is
    ``x / (1 + x)``. Returns 0 on the first observation and on the first
    loss difference, which only seeds the EMA.
    """
    if not math.isfinite(loss) or loss < 0:
        raise InvalidObservationError(f"loss must be finite and >= 0, got {loss!r}")
    prev = state.prev_loss
    state.prev_loss = loss
    if prev is None:
        return 0.0
    abs_delta = abs(loss - prev)
    if state.n_deltas == 0:
        state.ema_abs_delta = abs_delta
        state.n_deltas = 1
        return 0.0
    x = max(0.0, loss - prev) / (state.ema_abs_delta + EPS_NUM)
    beta = state.ema_decay
    state.ema_abs_delta = beta * state.ema_abs_delta + (1.0 - beta) * abs_delta
    state.n_deltas += 1
    return x / (1.0 + x)


def overconfidence_reflex(state: ReflexEstimatorState, mean_confidence: float,
                          batch_accuracy: float) -> float:
    """One-sided windowed gap between mean confidence and accuracy."""
    for name, v in (("mean_confidence", mean_confidence), ("batch_accuracy", batch_accuracy)):
        if not (math.isfinite(v) and 0.0 <= v <= 1.0):
            raise InvalidObservationError(f"{name} must lie in [0, 1], got {v!r}")
    state.calib_window.append((float(mean_confidence), float(batch_accuracy)))
    n = len(state.calib_window)
    conf = sum(c for c, _ in state.calib_window) / n
    acc = sum(a for _, a in state.calib_window) / n
    return min(1.0, max(0.0, conf - acc))


def memory_reflex(state: ReflexEstimatorState, incident: float) -> float:
    if not (math.isfinite(incident) and 0.0 <= incident <= 1.0):
        raise InvalidObservationError(f"incident must lie in [0, 1], got {incident!r}")
    m = state.recovery_credit + state.rho_up * (1.0 - incident) - state.rho_down * incident
    state.recovery_credit = min(1.0, max(0.0, m))
    return state.recovery_credit


@dataclass
class ReflexTriad:
    """Convenience wrapper that advances all three reflexes for one step."""

    state: ReflexEstimatorState = field(default_factory=ReflexEstimatorState)

    def observe(self, obs: StepObservation) -> tuple[float, float, float]:
        i = incident_reflex(self.state, obs.loss)
        o = overconfidence_reflex(self.state, obs.mean_confidence, obs.batch_accuracy)
        m = memory_reflex(self.state, i)
        return i, o, m
