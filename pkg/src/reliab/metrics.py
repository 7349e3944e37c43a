"""Evaluation quantities: calibration, loss variance, recovery time,
intervention frequency, composure and ablation deltas."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import kernels
from .errors import DomainError

EPS_NUM = 1e-8
RECOVERY_BAND = 0.05


@dataclass
class MetricsSummary:
    accuracy: float
    ece: float
    brier: float
    loss_variance: float
    tau_rec: int | None
    intervention_freq: float
    composure: float | None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        extra = d.pop("extra")
        d.update(extra)
        return d


def calibration_bins(confidences, corrects, n_bins: int = 15):
    """Per-bin (count, mean confidence, accuracy); empty bins report NaN means."""
    conf = np.asarray(confidences, dtype=np.float64).ravel()
    corr = np.asarray(corrects, dtype=np.float64).ravel()
    if n_bins < 1:
        raise DomainError("n_bins must be >= 1")
    if conf.size == 0:
        raise DomainError("calibration needs at least one sample")
    if conf.shape != corr.shape:
        raise DomainError("confidences and corrects differ in length")
    if conf.min() < 0 or conf.max() > 1:
        raise DomainError("confidences must lie in [0, 1]")
    counts, conf_sum, acc_sum = kernels.ece_bins(conf, corr, n_bins)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean_conf = conf_sum / counts
        acc = acc_sum / counts
    return counts, mean_conf, acc


def ece(confidences, corrects, n_bins: int = 15) -> float:
    """Expected calibration error over equal-width confidence bins.

    Bins are half-open ``[k/n, (k+1)/n)``; a confidence of exactly 1.0 is
    placed in the last bin.
    """
    counts, mean_conf, acc = calibration_bins(confidences, corrects, n_bins)
    n = counts.sum()
    total = 0.0
    for c, mc, a in zip(counts, mean_conf, acc):
        if c:
            total += (c / n) * abs(a - mc)
    return float(total)


def brier(probabilities, labels) -> float:
    """Mean multiclass Brier score, sum over classes of (p_k - onehot_k)^2."""
    p = np.asarray(probabilities, dtype=np.float64)
    if p.ndim == 1:
        p = p[None, :]
    y = np.asarray(labels, dtype=np.int64).ravel()
    if p.shape[0] != y.shape[0] or p.shape[0] == 0:
        raise DomainError("need one nonempty probability row per label")
    if np.any(np.abs(p.sum(axis=1) - 1.0) > 1e-6):
        raise DomainError("probability rows must sum to 1")
    if y.min() < 0 or y.max() >= p.shape[1]:
        raise DomainError("label out of range")
    onehot = np.zeros_like(p)
    onehot[np.arange(y.size), y] = 1.0
    return float(np.mean(np.sum((p - onehot) ** 2, axis=1)))


def rolling_variance_by_step(loss_trace, w_var: int) -> np.ndarray:
    """Variance of the ``w_var`` losses ending at each step; NaN before the first full window."""
    x = np.asarray(loss_trace, dtype=np.float64)
    out = np.full(x.size, np.nan)
    rv = kernels.rolling_variance(x, w_var)
    if rv.size:
        out[w_var - 1:] = rv
    return out


def loss_variance(loss_trace, w_var: int = 25) -> float:
    """Mean rolling-window variance of the loss over the whole trace."""
    rv = kernels.rolling_variance(np.asarray(loss_trace, dtype=np.float64), w_var)
    if rv.size == 0:
        raise DomainError(f"trace shorter than variance window {w_var}")
    return float(rv.mean())


def recovery_time_from_variance(rv_by_step, perturb_step: int, w_var: int,
                                sustain: int = 10) -> int | None:
    """Recovery time given a per-step rolling-variance trace (NaN where undefined).

    The reference is the mean variance over the ``w_var`` steps before the
    perturbation; recovery is the first later step from which the variance
    stays within +-5 % of it for ``sustain`` consecutive steps.
    """
    rv = np.asarray(rv_by_step, dtype=np.float64)
    if sustain < 1:
        raise DomainError("sustain must be >= 1")
    if perturb_step < w_var or perturb_step > rv.size:
        raise DomainError(f"need perturb_step >= w_var ({w_var}) and within the trace")
    pre = rv[perturb_step - w_var:perturb_step]
    pre = pre[~np.isnan(pre)]
    if pre.size == 0:
        raise DomainError("no rolling variance defined before the perturbation")
    ref = float(pre.mean())
    lo, hi = ref * (1.0 - RECOVERY_BAND), ref * (1.0 + RECOVERY_BAND)
    idx = kernels.first_sustained_in_band(rv, perturb_step + 1, lo, hi, sustain)
    return None if idx < 0 else int(idx - perturb_step)


def recovery_time(loss_trace, perturb_step: int, w_var: int = 25,
                  sustain: int = 10) -> int | None:
    if perturb_step < w_var:
        raise DomainError(f"need at least w_var={w_var} steps before the perturbation")
    return recovery_time_from_variance(rolling_variance_by_step(loss_trace, w_var),
                                       perturb_step, w_var, sustain)


def intervention_frequency(I_trace, O_trace, theta_act: float, steps_per_epoch: int) -> float:
    """Reflex activations per epoch."""
    if steps_per_epoch < 1:
        raise DomainError("steps_per_epoch must be >= 1")
    I = np.asarray(I_trace, dtype=np.float64)
    O = np.asarray(O_trace, dtype=np.float64)
    if I.size == 0:
        return 0.0
    count = int(np.count_nonzero((I >= theta_act) | (O >= theta_act)))
    return count / (I.size / steps_per_epoch)


def composure(r_trace, window: int) -> float:
    """Late-window variance of R over early-window variance; below 1 is a gain."""
    r = np.asarray(r_trace, dtype=np.float64)
    if window < 1 or r.size < 2 * window:
        raise DomainError(f"trace of length {r.size} too short for two windows of {window}")
    return float(np.var(r[-window:]) / (np.var(r[:window]) + EPS_NUM))


def delta_metric(m_variant: float, m_reference: float) -> float:
    """Signed percentage deviation of a variant from the reference."""
    if m_reference == 0 or not math.isfinite(m_reference):
        raise DomainError("reference metric must be finite and nonzero")
    if m_variant == m_reference:
        return 0.0
    return 100.0 * (m_variant - m_reference) / m_reference
