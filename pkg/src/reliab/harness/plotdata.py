"""CSV series behind the calibration, trajectory, maturity and mode figures."""
from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from ..errors import DomainError
from ..metrics import calibration_bins

KINDS = ("calibration_curve", "reliability_trajectory", "maturity_curve", "agility_safety")


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def calibration_curve(confidences, corrects, n_bins: int = 15) -> str:
    counts, mean_conf, acc = calibration_bins(confidences, corrects, n_bins)
    rows = []
    for b in range(n_bins):
        c = int(counts[b])
        rows.append((b, b / n_bins, (b + 1) / n_bins,
                     float(mean_conf[b]) if c else "", float(acc[b]) if c else "", c))
    return _csv(("bin", "lower", "upper", "mean_confidence", "accuracy", "count"), rows)


def reliability_trajectory(trace) -> str:
    return _csv(("step", "R", "eta"), [(r["step"], r["R"], r["eta"]) for r in trace])


def maturity_curve(trace) -> str:
    epochs: dict[int, list[dict]] = {}
    for r in trace:
        epochs.setdefault(r["epoch"], []).append(r)
    rows = []
    for e in sorted(epochs):
        rs = epochs[e]
        rows.append((e, float(np.var([r["R"] for r in rs])), sum(bool(r["activated"]) for r in rs)))
    return _csv(("epoch", "R_variance", "interventions"), rows)


def agility_safety(trace) -> str:
    return _csv(("step", "mode", "I", "R"), [(r["step"], r["mode"], r["I"], r["R"]) for r in trace])


def read_predictions(path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.DictReader(f))
    conf = np.array([float(r["confidence"]) for r in rows])
    corr = np.array([r["correct"] == "1" for r in rows])
    return conf, corr


def emit_plot_data(kind: str, trace=None, predictions=None, n_bins: int = 15) -> str:
    """Render one figure's data as CSV text.

    ``calibration_curve`` needs ``predictions`` as (confidences, corrects);
    every other kind needs the step ``trace``.
    """
    if kind not in KINDS:
        raise DomainError(f"unknown plot kind {kind!r}; choose from {KINDS}")
    if kind == "calibration_curve":
        if predictions is None:
            raise DomainError("calibration_curve needs per-sample predictions")
        return calibration_curve(*predictions, n_bins=n_bins)
    if trace is None:
        raise DomainError(f"{kind} needs a trace")
    return {"reliability_trajectory": reliability_trajectory,
            "maturity_curve": maturity_curve,
            "agility_safety": agility_safety}[kind](trace)


def write_plot_data(kind: str, out_path, **kwargs) -> Path:
    out_path = Path(out_path)
    out_path.write_text(emit_plot_data(kind, **kwargs), encoding="utf-8", newline="\n")
    return out_path
