"""Single training run under the reliability controller."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import kernels, metrics
from ..controller import classify_mode, fuse, is_intervention, learning_rate
from ..errors import ConfigError, ReliabError, TrainingFault
from ..learner.data import Dataset, load_idx, make_blobs, train_test_split
from ..learner.model import backward, forward, init_mlp
from ..learner.optim import make_optimizer
from ..learner.perturb import apply_perturbation
from ..reflexes import (ReflexEstimatorState, incident_reflex, memory_reflex,
                        overconfidence_reflex)
from ..stability import AssumptionTracker, LyapunovLedger, contraction_violation_fraction
from .config import ABLATION_DROPS, ExperimentConfig

log = logging.getLogger(__name__)

TRACE_COLUMNS = ("step", "epoch", "loss", "I", "O", "M", "R", "eta", "V", "delta_V",
                 "mode", "activated", "grad_norm", "mu_hat")


@dataclass
class RunResult:
    trace: list[dict]
    summary: dict
    trace_path: Path | None = None
    summary_path: Path | None = None
    predictions: dict | None = None


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def trace_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_COLUMNS)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in TRACE_COLUMNS])
    return buf.getvalue()


def read_trace(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        if tuple(reader.fieldnames or ()) != TRACE_COLUMNS:
            raise ReliabError(f"{path}: not a trace file (columns {reader.fieldnames})")
        rows = []
        for r in reader:
            rows.append({
                "step": int(r["step"]), "epoch": int(r["epoch"]), "loss": float(r["loss"]),
                "I": float(r["I"]), "O": float(r["O"]), "M": float(r["M"]), "R": float(r["R"]),
                "eta": float(r["eta"]), "V": float(r["V"]),
                "delta_V": float(r["delta_V"]) if r["delta_V"] else None,
                "mode": r["mode"], "activated": r["activated"] == "1",
                "grad_norm": float(r["grad_norm"]),
                "mu_hat": float(r["mu_hat"]) if r["mu_hat"] else None,
            })
    return rows


def load_datasets(cfg: ExperimentConfig, seed: int) -> tuple[Dataset, Dataset]:
    dc = cfg.dataset
    if dc.kind == "blobs":
        data_seed = dc.seed if dc.seed is not None else seed
        full = make_blobs(data_seed, dc.n, dc.d, dc.n_classes, dc.spread, dc.center_scale)
        return train_test_split(full, dc.test_fraction, data_seed)
    train = load_idx(dc.train_images, dc.train_labels, limit=dc.limit)
    if dc.test_images and dc.test_labels:
        test = load_idx(dc.test_images, dc.test_labels, n_classes=train.n_classes, limit=dc.test_limit)
    else:
        train, test = train_test_split(train, 0.2, seed)
    return train, test


def _flatten(arrays) -> np.ndarray:
    return np.concatenate([np.ravel(a) for a in arrays])


def run_experiment(cfg: ExperimentConfig, seed: int | None = None,
                   datasets: tuple[Dataset, Dataset] | None = None,
                   output_dir: str | Path | None = None, write: bool = True) -> RunResult:
    """Train one model under ``cfg`` and evaluate it.

    Writes ``trace.csv``, ``summary.json`` and ``predictions.csv`` into the
    output directory when ``write`` is true. A training fault flushes the
    partial trace and a summary carrying the fault, then re-raises.
    """
    seed = cfg.seed if seed is None else seed
    train, test = datasets if datasets is not None else load_datasets(cfg, seed)
    ctrl = cfg.controller
    weights = ctrl.weights
    drop = ABLATION_DROPS.get(cfg.ablation)
    if drop:
        weights = weights.without(drop)
    plain = cfg.ablation == "plain"

    steps_per_epoch = math.ceil(len(train) / cfg.batch_size)
    total_steps = steps_per_epoch * cfg.epochs
    pert = cfg.perturbation
    if pert is not None and pert.at_step >= total_steps:
        raise ConfigError(f"perturbation.at_step {pert.at_step} beyond run length {total_steps}")

    model = init_mlp([train.dim, *cfg.hidden_layers, train.n_classes], seed=seed)
    opt = make_optimizer(cfg.optimizer)
    rc = cfg.reflexes
    rstate = ReflexEstimatorState(ema_decay=rc.beta, calib_capacity=rc.calib_window,
                                  recovery_credit=rc.memory_init, rho_up=rc.rho_up,
                                  rho_down=rc.rho_down)
    ledger = LyapunovLedger()
    assumptions = AssumptionTracker()
    shuffle_rng = np.random.default_rng([seed, 1])
    pert_rng = np.random.default_rng([seed, 2])

    out_dir = Path(output_dir if output_dir is not None else cfg.output_dir)
    rows: list[dict] = []
    params = model.params()
    fault: TrainingFault | None = None
    step = 0
    try:
        for epoch in range(cfg.epochs):
            order = shuffle_rng.permutation(len(train)) if cfg.shuffle else np.arange(len(train))
            for b in range(steps_per_epoch):
                idx = order[b * cfg.batch_size:(b + 1) * cfg.batch_size]
                if pert is not None and pert.kind != "gradient_spike" and pert.active(step):
                    train, _ = apply_perturbation(pert, step, train, None, pert_rng)
                xb, yb = train.inputs[idx], train.labels[idx]
                # non-finite values are caught explicitly below
                with np.errstate(over="ignore", invalid="ignore"):
                    _, probs, cache = forward(model, xb)
                    loss, grads = backward(model, cache, yb)
                if not math.isfinite(loss):
                    raise TrainingFault(f"non-finite loss at step {step}", step)
                grad_norm = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads)))
                if pert is not None and pert.kind == "gradient_spike":
                    _, step_grads = apply_perturbation(pert, step, train, grads, pert_rng)
                else:
                    step_grads = grads
                conf = float(probs.max(axis=1).mean())
                acc = float(np.mean(probs.argmax(axis=1) == yb))

                I = incident_reflex(rstate, loss)
                O = overconfidence_reflex(rstate, conf, acc)
                M = memory_reflex(rstate, I)
                if drop == "I":
                    I = 0.0
                elif drop == "O":
                    O = 0.0
                elif drop == "M":
                    M = 0.0
                R = fuse(I, O, M, weights)
                eta = ctrl.eta0 if plain else learning_rate(R, ctrl)
                mode = classify_mode(R, I, ctrl)

                theta_before = _flatten(params)
                directions = opt.step(params, step_grads, eta)
                model.check_finite(step)
                rep = assumptions.observe(theta_before, _flatten(grads), _flatten(directions), R)
                verdict = ledger.record_step(loss, R, grad_norm, ctrl)
                rows.append({
                    "step": step, "epoch": epoch, "loss": loss, "I": I, "O": O, "M": M,
                    "R": R, "eta": eta, "V": verdict.v, "delta_V": verdict.delta_v,
                    "mode": mode.value, "activated": is_intervention(I, O, ctrl),
                    "grad_norm": grad_norm, "mu_hat": rep.mu_hat,
                })
                step += 1
    except TrainingFault as exc:
        fault = exc
        log.warning("training fault: %s", exc)

    losses = np.array([r["loss"] for r in rows])
    summary: dict = {
        "seed": seed, "variant": cfg.ablation, "optimizer": cfg.optimizer,
        "steps": len(rows), "steps_per_epoch": steps_per_epoch,
        "kernel_backend": kernels.BACKEND,
    }
    preds = None
    if fault is None:
        _, probs, _ = forward(model, test.inputs)
        conf = probs.max(axis=1)
        pred = probs.argmax(axis=1)
        correct = pred == test.labels
        mc = cfg.metrics
        tau = None
        if pert is not None:
            try:
                tau = metrics.recovery_time(losses, pert.at_step, mc.w_var, mc.sustain)
            except ReliabError as exc:
                log.warning("recovery time undefined: %s", exc)
        R_trace = [r["R"] for r in rows]
        try:
            comp = metrics.composure(R_trace, mc.composure_window)
        except ReliabError:
            comp = None
        ms = metrics.MetricsSummary(
            accuracy=float(correct.mean()),
            ece=metrics.ece(conf, correct, mc.n_bins),
            brier=metrics.brier(probs, test.labels),
            loss_variance=metrics.loss_variance(losses, mc.w_var) if len(rows) >= mc.w_var else 0.0,
            tau_rec=tau,
            intervention_freq=metrics.intervention_frequency(
                [r["I"] for r in rows], [r["O"] for r in rows], ctrl.theta_act, steps_per_epoch),
            composure=comp,
        )
        summary.update(ms.to_dict())
        summary["tau_rec_horizon"] = None if pert is None else len(rows) - pert.at_step
        summary["final_loss"] = float(losses[-1])
        summary["mean_eta"] = float(np.mean([r["eta"] for r in rows]))
        summary["contraction_violation_fraction"] = contraction_violation_fraction(R_trace, ctrl)
        summary["mode_counts"] = {m: sum(r["mode"] == m for r in rows)
                                  for m in ("agility", "safety", "nominal")}
        preds = {"confidence": conf, "correct": correct, "label": test.labels, "pred": pred}
    summary["lyapunov"] = ledger.summary()
    summary["assumptions"] = assumptions.summary()
    summary["fault"] = None if fault is None else {"step": fault.step, "message": str(fault)}

    result = RunResult(rows, summary, predictions=preds)
    if write:
        out_dir.mkdir(parents=True, exist_ok=True)
        result.trace_path = out_dir / "trace.csv"
        result.trace_path.write_text(trace_to_csv(rows), encoding="utf-8", newline="\n")
        result.summary_path = out_dir / "summary.json"
        result.summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n",
                                       encoding="utf-8", newline="\n")
        (out_dir / "config.json").write_text(json.dumps(cfg.to_dict(), indent=2) + "\n",
                                             encoding="utf-8", newline="\n")
        if preds is not None:
            write_predictions(out_dir / "predictions.csv", preds)
    if fault is not None:
        fault.result = result
        raise fault
    return result


def write_predictions(path: Path, preds: dict) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("confidence", "correct", "label", "pred"))
    for c, ok, y, p in zip(preds["confidence"], preds["correct"], preds["label"], preds["pred"]):
        w.writerow((repr(float(c)), int(bool(ok)), int(y), int(p)))
    Path(path).write_text(buf.getvalue(), encoding="utf-8", newline="\n")
