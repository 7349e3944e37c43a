"""Command line entry point: ``reliab run|ablate|plot-data|validate``.

Exit codes: 0 success, 1 validation/usage error, 2 training fault.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from ..errors import ReliabError, TrainingFault
from .ablation import run_ablation, table_to_csv
from .config import parse_config
from .plotdata import KINDS, emit_plot_data, read_predictions
from .runner import read_trace, run_experiment

EXIT_OK, EXIT_INVALID, EXIT_FAULT = 0, 1, 2


def _cmd_validate(args) -> int:
    cfg = parse_config(args.config)
    print(json.dumps(cfg.to_dict(), indent=2))
    return EXIT_OK


def _cmd_run(args) -> int:
    cfg = parse_config(args.config)
    res = run_experiment(cfg, seed=args.seed, output_dir=args.output_dir)
    s = res.summary
    print(f"trace:   {res.trace_path}")
    print(f"summary: {res.summary_path}")
    print(f"accuracy={s['accuracy']:.4f} ece={s['ece']:.4f} brier={s['brier']:.4f} "
          f"loss_variance={s['loss_variance']:.3e} tau_rec={s['tau_rec']}")
    return EXIT_OK


def _cmd_ablate(args) -> int:
    cfg = parse_config(args.config)
    seeds = tuple(range(args.seeds)) if args.seeds is not None else None
    out = run_ablation(cfg, seeds=seeds, jobs=args.jobs, output_dir=args.output_dir)
    sys.stdout.write(table_to_csv(out["table"]))
    return EXIT_FAULT if any(r["faulted"] for r in out["table"]) else EXIT_OK


def _cmd_plot_data(args) -> int:
    src = Path(args.trace)
    if args.kind == "calibration_curve":
        pred_path = src if src.name.startswith("predictions") else src.with_name("predictions.csv")
        text = emit_plot_data(args.kind, predictions=read_predictions(pred_path), n_bins=args.bins)
    else:
        text = emit_plot_data(args.kind, trace=read_trace(src))
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="reliab", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="train one configuration and write trace + summary")
    r.add_argument("config")
    r.add_argument("--seed", type=int, default=None)
    r.add_argument("--output-dir", default=None)
    r.set_defaults(func=_cmd_run)

    a = sub.add_parser("ablate", help="run the reflex ablation matrix")
    a.add_argument("config")
    a.add_argument("--seeds", type=int, default=None, help="use seeds 0..k-1 (default: config seeds)")
    a.add_argument("--jobs", type=int, default=1)
    a.add_argument("--output-dir", default=None)
    a.set_defaults(func=_cmd_ablate)

    d = sub.add_parser("plot-data", help="emit figure data as CSV")
    d.add_argument("trace", help="trace.csv (or predictions.csv for calibration_curve)")
    d.add_argument("--kind", required=True, choices=KINDS)
    d.add_argument("--bins", type=int, default=15)
    d.add_argument("--out", default=None)
    d.set_defaults(func=_cmd_plot_data)

    v = sub.add_parser("validate", help="check a config and print it with defaults filled in")
    v.add_argument("config")
    v.set_defaults(func=_cmd_validate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except TrainingFault as exc:
        print(f"training fault: {exc}", file=sys.stderr)
        return EXIT_FAULT
    except (ReliabError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
