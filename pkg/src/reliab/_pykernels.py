"""Pure-Python/numpy implementations of the hot trace kernels.

Each function here has a twin with the identical signature in the compiled
``_ckernels`` extension. ``reliab.kernels`` picks one at import time.
"""
from __future__ import annotations

import numpy as np


def rolling_variance(x: np.ndarray, window: int) -> np.ndarray:
    """Population variance of every full window; entry j covers x[j:j+window]."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    n = x.shape[0]
    if window < 1 or n < window:
        return np.empty(0, dtype=np.float64)
    windows = np.lib.stride_tricks.sliding_window_view(x, window)
    return windows.var(axis=1)


def first_sustained_in_band(values: np.ndarray, start: int, lo: float, hi: float,
                            sustain: int) -> int:
    """Smallest i >= start with lo <= values[i:i+sustain] <= hi, or -1."""
    values = np.ascontiguousarray(values, dtype=np.float64)
    n = values.shape[0]
    run = 0
    i = max(start, 0)
    while i < n:
        v = values[i]
        if lo <= v <= hi:
            run += 1
            if run == sustain:
                return i - sustain + 1
        else:
            run = 0
        i += 1
    return -1


def ece_bins(confidences: np.ndarray, correct: np.ndarray, n_bins: int):
    """Per-bin (count, confidence sum, correct sum) over equal-width bins."""
    conf = np.ascontiguousarray(confidences, dtype=np.float64)
    corr = np.ascontiguousarray(correct, dtype=np.float64)
    counts = np.zeros(n_bins, dtype=np.int64)
    conf_sum = np.zeros(n_bins, dtype=np.float64)
    acc_sum = np.zeros(n_bins, dtype=np.float64)
    for c, a in zip(conf.tolist(), corr.tolist()):
        b = int(c * n_bins)
        if b >= n_bins:
            b = n_bins - 1
        elif b < 0:
            b = 0
        counts[b] += 1
        conf_sum[b] += c
        acc_sum[b] += a
    return counts, conf_sum, acc_sum


def lyapunov_replay(loss: np.ndarray, reliability: np.ndarray, grad_norm: np.ndarray,
                    kappa: float, delta: float, tol: float):
    """Replay a trace through the descent ledger.

    Returns (V, dV, violations, max_dV, partial_sums); dV[0] is NaN.
    """
    loss = np.ascontiguousarray(loss, dtype=np.float64)
    r = np.ascontiguousarray(reliability, dtype=np.float64)
    g = np.ascontiguousarray(grad_norm, dtype=np.float64)
    n = loss.shape[0]
    v = np.empty(n, dtype=np.float64)
    dv = np.empty(n, dtype=np.float64)
    partial = np.empty(n, dtype=np.float64)
    violations = 0
    max_dv = -np.inf
    running = 0.0
    for t in range(n):
        v[t] = loss[t] + kappa * (1.0 - r[t])
        if t == 0:
            dv[t] = np.nan
        else:
            d = v[t] - v[t - 1]
            dv[t] = d
            if d > max_dv:
                max_dv = d
            if d > tol:
                violations += 1
        scale = 1.0 if delta == 0.0 else r[t] ** delta
        running += scale * g[t] * g[t]
        partial[t] = running
    return v, dv, violations, float(max_dv), partial
