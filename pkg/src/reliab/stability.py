"""Runtime audits of the bounded-adaptation argument.

The descent of ``V_t = L_t + kappa * (1 - R_t)`` is only guaranteed under
smoothness, direction-alignment and a contraction assumption on ``R_t``.
This module measures each of those on a live run; it reports, it does not
enforce.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .controller import ControllerConfig, contraction_bound
from .errors import AuditError, DomainError

DEFAULT_TOL = 1e-9


def lyapunov(loss: float, R: float, kappa: float) -> float:
    if loss < 0 or not 0.0 <= R <= 1.0 or kappa <= 0:
        raise DomainError("lyapunov needs loss >= 0, R in [0, 1], kappa > 0")
    return loss + kappa * (1.0 - R)


@dataclass(frozen=True)
class DescentVerdict:
    v: float
    delta_v: float | None
    violated: bool


@dataclass
class LyapunovLedger:
    tol: float = DEFAULT_TOL
    v_prev: float | None = None
    violations: int = 0
    max_delta_v: float = -math.inf
    summability_partial: float = 0.0
    steps: int = 0

    def record_step(self, loss: float, R: float, grad_norm: float,
                    cfg: ControllerConfig) -> DescentVerdict:
        if not all(math.isfinite(x) for x in (loss, R, grad_norm)):
            raise AuditError(f"non-finite audit input at step {self.steps}")
        v = lyapunov(loss, R, cfg.kappa)
        delta_v = None
        violated = False
        if self.v_prev is not None:
            delta_v = v - self.v_prev
            self.max_delta_v = max(self.max_delta_v, delta_v)
            violated = delta_v > self.tol
            self.violations += violated
        scale = 1.0 if cfg.delta == 0.0 else R ** cfg.delta
        self.summability_partial += scale * grad_norm * grad_norm
        self.v_prev = v
        self.steps += 1
        return DescentVerdict(v, delta_v, violated)

    def summary(self) -> dict:
        return {
            "steps": self.steps,
            "violations": self.violations,
            "max_delta_v": None if self.steps < 2 else self.max_delta_v,
            "summability_partial": self.summability_partial,
            "tol": self.tol,
        }


def stepsize_condition(eta0: float, l_smooth: float, g_bound: float, mu: float,
                       r_lower: float, delta: float) -> bool:
    """Whether ``(L/2) eta0^2 G^2 <= (1/2) eta0 mu R_lower^delta`` holds."""
    if min(eta0, l_smooth, g_bound, mu) <= 0:
        raise DomainError("eta0, l_smooth, g_bound and mu must be > 0")
    if not 0.0 < r_lower <= 1.0:
        raise DomainError("r_lower must lie in (0, 1]")
    if not 0.0 <= delta <= 1.0:
        raise DomainError("delta must lie in [0, 1]")
    # divided form keeps the boundary case exact
    return eta0 <= mu * r_lower ** delta / (l_smooth * g_bound * g_bound)


def max_stable_eta0(l_smooth: float, g_bound: float, mu: float, r_lower: float,
                    delta: float) -> float:
    return mu * r_lower ** delta / (l_smooth * g_bound * g_bound)


def alignment_diagnostics(grad, direction) -> tuple[float | None, float]:
    """(mu_hat, ||direction||); mu_hat is None when the gradient vanishes."""
    g = np.ravel(np.asarray(grad, dtype=np.float64))
    d = np.ravel(np.asarray(direction, dtype=np.float64))
    if g.shape != d.shape:
        raise DomainError(f"length mismatch: {g.size} vs {d.size}")
    gg = float(g @ g)
    mu_hat = float(g @ d) / gg if gg > 0 else None
    return mu_hat, float(np.sqrt(d @ d))


@dataclass
class AssumptionReport:
    mu_hat: float | None = None
    g_norm: float = 0.0
    l_smooth_est: float = 0.0
    r_lower_observed: float = 1.0


class AssumptionTracker:
    """Running diagnostics for the smoothness, alignment and boundedness assumptions."""

    def __init__(self):
        self.report = AssumptionReport()
        self._prev_theta: np.ndarray | None = None
        self._prev_grad: np.ndarray | None = None
        self.mu_min: float | None = None
        self.g_max = 0.0
        self.a2_violations = 0

    def observe(self, theta, grad, direction, R: float) -> AssumptionReport:
        theta = np.ravel(np.asarray(theta, dtype=np.float64)).copy()
        grad = np.ravel(np.asarray(grad, dtype=np.float64)).copy()
        mu_hat, g_norm = alignment_diagnostics(grad, direction)
        rep = self.report
        rep.mu_hat, rep.g_norm = mu_hat, g_norm
        rep.r_lower_observed = min(rep.r_lower_observed, R)
        self.g_max = max(self.g_max, g_norm)
        if mu_hat is not None:
            self.mu_min = mu_hat if self.mu_min is None else min(self.mu_min, mu_hat)
            self.a2_violations += mu_hat <= 0
        if self._prev_theta is not None:
            step = float(np.linalg.norm(theta - self._prev_theta))
            if step > 0:
                secant = float(np.linalg.norm(grad - self._prev_grad)) / step
                rep.l_smooth_est = max(rep.l_smooth_est, secant)
        self._prev_theta, self._prev_grad = theta, grad
        return rep

    def summary(self) -> dict:
        return {
            "mu_min": self.mu_min,
            "g_max": self.g_max,
            "l_smooth_est": self.report.l_smooth_est,
            "r_lower_observed": self.report.r_lower_observed,
            "a2_violations": self.a2_violations,
        }


def contraction_violation_fraction(r_trace, cfg: ControllerConfig) -> float:
    """Fraction of transitions where ``1 - R_{t+1}`` exceeds the contraction bound."""
    r = [float(x) for x in r_trace]
    if len(r) < 2:
        return 0.0
    bad = sum((1.0 - r[t + 1]) > contraction_bound(r[t], cfg) for t in range(len(r) - 1))
    return bad / (len(r) - 1)


def replay(loss, reliability, grad_norm, cfg: ControllerConfig, tol: float = DEFAULT_TOL) -> dict:
    """Audit a finished trace in one pass (compiled when available)."""
    v, dv, violations, max_dv, partial = kernels.lyapunov_replay(
        np.asarray(loss, dtype=np.float64), np.asarray(reliability, dtype=np.float64),
        np.asarray(grad_norm, dtype=np.float64), cfg.kappa, cfg.delta, tol)
    return {"v": v, "delta_v": dv, "violations": int(violations),
            "max_delta_v": float(max_dv), "partial": partial}


def tail_increment_fraction(partial, tail: float = 0.1) -> float:
    """Share of the final partial sum accrued over the last ``tail`` of the run."""
    partial = np.asarray(partial, dtype=np.float64)
    n = partial.size
    if n == 0 or partial[-1] == 0:
        return 0.0
    k = max(1, int(round(n * tail)))
    before = partial[n - k - 1] if n - k - 1 >= 0 else 0.0
    return float((partial[-1] - before) / partial[-1])
