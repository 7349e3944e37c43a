"""Reflex ablation matrix: every variant under every seed, deltas versus Full."""
from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from ..errors import ReliabError, TrainingFault
from ..metrics import delta_metric
from .config import ABLATIONS, ExperimentConfig
from .runner import run_experiment

log = logging.getLogger(__name__)

TABLE_METRICS = ("loss_variance", "ece", "tau_rec")
TABLE_COLUMNS = ("variant", "loss_variance", "ece", "tau_rec", "tau_rec_censored",
                 "d_loss_variance", "d_ece", "d_tau_rec", "faulted")


def _one(args):
    cfg, variant, seed, out_dir = args
    try:
        res = run_experiment(cfg.with_(ablation=variant), seed=seed, output_dir=out_dir)
        return variant, seed, res.summary
    except TrainingFault as exc:
        return variant, seed, {"fault": {"step": exc.step, "message": str(exc)}}


def censored_tau(summary: dict) -> tuple[float | None, bool]:
    """tau_rec with an unrecovered run counted as the full post-perturbation horizon."""
    tau = summary.get("tau_rec")
    if tau is not None:
        return float(tau), False
    horizon = summary.get("tau_rec_horizon")
    return (None if horizon is None else float(horizon)), True


def aggregate(summaries: dict[str, list[dict]]) -> list[dict]:
    """Seed means per variant and signed percentage deltas against ``full``."""
    rows = {}
    for variant in ABLATIONS:
        runs = summaries.get(variant, [])
        ok = [s for s in runs if not s.get("fault")]
        row = {"variant": variant, "faulted": len(ok) != len(runs) or not runs,
               "loss_variance": None, "ece": None, "tau_rec": None, "tau_rec_censored": 0}
        if ok:
            row["loss_variance"] = float(np.mean([s["loss_variance"] for s in ok]))
            row["ece"] = float(np.mean([s["ece"] for s in ok]))
            taus = [censored_tau(s) for s in ok]
            if all(t is not None for t, _ in taus):
                row["tau_rec"] = float(np.mean([t for t, _ in taus]))
            row["tau_rec_censored"] = sum(c for _, c in taus)
        rows[variant] = row
    ref = rows["full"]
    for row in rows.values():
        for m in TABLE_METRICS:
            try:
                row[f"d_{m}"] = delta_metric(row[m], ref[m]) if None not in (row[m], ref[m]) else None
            except ReliabError:
                row[f"d_{m}"] = None
    return [rows[v] for v in ABLATIONS]


def table_to_csv(table: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TABLE_COLUMNS)
    for row in table:
        w.writerow(["" if row[c] is None else (repr(row[c]) if isinstance(row[c], float) else row[c])
                    for c in TABLE_COLUMNS])
    return buf.getvalue()


def run_ablation(base: ExperimentConfig, seeds=None, jobs: int = 1,
                 output_dir: str | Path | None = None) -> dict:
    """Run Full, NoIncident, NoOverconfidence, NoMemory and Plain for each seed.

    Returns ``{"table": [...], "runs": {variant: [summary per seed]}}`` and
    writes ``ablation.csv`` / ``ablation.json`` under ``output_dir/ablation``.
    """
    seeds = tuple(base.seeds if seeds is None else seeds)
    if not seeds:
        raise ReliabError("ablation needs at least one seed")
    root = Path(output_dir if output_dir is not None else base.output_dir) / "ablation"
    tasks = [(base, v, s, root / v / f"seed_{s}") for v in ABLATIONS for s in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_one, tasks))
    else:
        results = [_one(t) for t in tasks]
    runs: dict[str, list[dict]] = {v: [] for v in ABLATIONS}
    for variant, _seed, summary in results:
        runs[variant].append(summary)
    table = aggregate(runs)
    root.mkdir(parents=True, exist_ok=True)
    (root / "ablation.csv").write_text(table_to_csv(table), encoding="utf-8", newline="\n")
    (root / "ablation.json").write_text(
        json.dumps({"seeds": list(seeds), "table": table, "runs": runs}, indent=2, sort_keys=True) + "\n",
        encoding="utf-8", newline="\n")
    return {"table": table, "runs": runs, "seeds": list(seeds)}
