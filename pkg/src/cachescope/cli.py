"""cachescope command-line interface.

Subcommands: simulate, summarize, train, gridsearch, periodogram,
report. All are deterministic given their flags and seeds. Exit codes:
0 success, 1 usage error, 2 data error. Set CACHESCOPE_LOG to error,
info, or debug to control logging.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .errors import CachescopeError
from .features import FEATURE_NAMES, feature_matrix
from .federation import load_federation_config, run_simulation, socal_preset
from .forecast import (
    FULL_GRID,
    REDUCED_GRID,
    enumerate_grid,
    evaluate_model,
    fit_forecaster,
    grid_search,
    prepare_dataset,
    write_leaderboard,
)
from .lstm import HyperParams, save_model
from .metrics import aggregate, read_summaries, write_summaries
from .records import read_trace, trace_format_for_path, write_trace
from .report import emit_report
from .seasonality import detect_peaks, periodogram
from .workload import WorkloadConfig, generate_workload

log = logging.getLogger("cachescope")


class _Parser(argparse.ArgumentParser):
    """argparse with the documented usage-error exit code (1, not 2)."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cachescope", description=__doc__)
    parser.add_argument("--version", action="version", version=f"cachescope {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="run the federation simulator over a workload")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", choices=["socal"], help="bundled federation topology")
    src.add_argument("--federation", type=Path, help="federation config JSON")
    p.add_argument("--workload", type=Path, required=True, help="workload config JSON")
    p.add_argument("--seed", type=int, help="override the workload seed")
    p.add_argument("-o", "--output", type=Path, required=True, help="trace file to write")
    p.add_argument("--format", choices=["csv", "jsonl"], help="trace format (default: by suffix)")

    p = sub.add_parser("summarize", help="aggregate a trace into period summaries")
    p.add_argument("trace", type=Path)
    p.add_argument("--period", choices=["day", "week"], default="day")
    p.add_argument("--scope", default="ALL", help="node_id or ALL")
    p.add_argument("--ma-window", type=int, default=0, help="append trailing-MA columns")
    p.add_argument("--skip-gaps", action="store_true",
                   help="exclude zero-access days from MA denominators")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("-o", "--output", type=Path, required=True)

    p = sub.add_parser("train", help="train one LSTM forecaster from a summary file")
    p.add_argument("summary", type=Path)
    p.add_argument("--units", type=int, default=128, help="first-layer LSTM units")
    p.add_argument("--units2", type=int, default=0, help="second-layer units (0 = one layer)")
    p.add_argument("--act", default="tanh", choices=["tanh", "relu"])
    p.add_argument("--act2", default="tanh", choices=["tanh", "relu"])
    p.add_argument("--dropout", type=float, default=0.0)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--window", type=int, default=7, help="input window length in days")
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--dow", action="store_true", help="append day-of-week one-hot inputs")
    p.add_argument("--ma-window", type=int, default=0,
                   help="smooth features with a trailing MA before training")
    p.add_argument("--scope", default="ALL")
    p.add_argument("--seed", type=int, default=0, help="training seed (default 0)")
    p.add_argument("--format", choices=["csv", "json"], default="csv",
                   help="evaluation report format")
    p.add_argument("-o", "--output", type=Path, required=True, help="model snapshot path")
    p.add_argument("--eval-out", type=Path, help="evaluation report path")

    p = sub.add_parser("gridsearch", help="hyperparameter grid search over a summary file")
    p.add_argument("summary", type=Path)
    p.add_argument("--grid-mode", choices=["reduced", "full"], default="reduced")
    p.add_argument("--window", type=int, default=7)
    p.add_argument("--dow", action="store_true")
    p.add_argument("--ma-window", type=int, default=0)
    p.add_argument("--scope", default="ALL")
    p.add_argument("--seed", type=int, default=0,
                   help="base seed; combination i trains with seed XOR i (default 0)")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("-o", "--output", type=Path, required=True, help="leaderboard path")
    p.add_argument("--model-out", type=Path, help="best model snapshot path")

    p = sub.add_parser("periodogram", help="spectral peaks of daily feature series")
    p.add_argument("summary", type=Path)
    p.add_argument("--feature", default="all", choices=["all", *FEATURE_NAMES])
    p.add_argument("--top", type=int, default=5, help="peaks per feature (0 = all bins)")
    p.add_argument("--scope", default="ALL")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("-o", "--output", type=Path, required=True)

    p = sub.add_parser("report", help="monthly summary-statistics table from a trace")
    p.add_argument("trace", type=Path)
    p.add_argument("--scope", default="ALL")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("-o", "--output", type=Path, required=True)
    return parser


def _cmd_simulate(args) -> None:
    if args.preset:
        specs, events = socal_preset()
    else:
        specs, events = load_federation_config(args.federation)
    cfg = WorkloadConfig.from_json(args.workload)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    requests = generate_workload(cfg)
    log.info("generated %d requests over %s..%s", len(requests), cfg.start_date, cfg.end_date)
    trace = run_simulation(specs, events, requests)
    write_trace(args.output, trace, args.format or trace_format_for_path(args.output))
    log.info("wrote %d records to %s", len(trace), args.output)


def _cmd_summarize(args) -> None:
    records = read_trace(args.trace)
    summaries = aggregate(records, period=args.period, scope=args.scope)
    write_summaries(
        args.output,
        summaries,
        fmt=args.format,
        ma_window=args.ma_window,
        skip_gaps=args.skip_gaps,
    )
    log.info("wrote %d %s rows to %s", len(summaries), args.period, args.output)


def _hp_from_args(args) -> HyperParams:
    return HyperParams(
        units1=args.units,
        units2=args.units2,
        act1=args.act,
        act2=args.act2,
        dropout=args.dropout,
        epochs=args.epochs,
        window_len=args.window,
        learning_rate=args.lr,
        batch_size=args.batch_size,
        seed=args.seed,
    )


def _cmd_train(args) -> None:
    summaries = read_summaries(args.summary, scope=args.scope)
    hp = _hp_from_args(args)
    model, report, _ = fit_forecaster(
        summaries, hp, use_dow=args.dow, ma_window=args.ma_window
    )
    save_model(model, args.output)
    eval_path = args.eval_out or args.output.with_name(
        args.output.stem + f"_eval.{args.format}"
    )
    report.write(eval_path, args.format)
    log.info(
        "model -> %s, eval -> %s (overall accuracy %.3f)",
        args.output, eval_path, report.overall_accuracy,
    )


def _cmd_gridsearch(args) -> None:
    summaries = read_summaries(args.summary, scope=args.scope)
    grid_spec = REDUCED_GRID if args.grid_mode == "reduced" else FULL_GRID
    base = HyperParams(window_len=args.window)
    grid = enumerate_grid(grid_spec, base)
    dataset = prepare_dataset(summaries, args.window, args.dow, args.ma_window)
    best, entries = grid_search(dataset, grid, base_seed=args.seed)
    write_leaderboard(args.output, entries, args.format)
    if args.model_out:
        save_model(best, args.model_out)
        report = evaluate_model(
            best, (dataset.x_train, dataset.y_train), (dataset.x_test, dataset.y_test)
        )
        log.info("best model overall accuracy %.3f", report.overall_accuracy)
    log.info("leaderboard (%d combinations) -> %s", len(entries), args.output)


def _cmd_periodogram(args) -> None:
    summaries = read_summaries(args.summary, scope=args.scope)
    rows = feature_matrix(summaries)
    names = list(FEATURE_NAMES) if args.feature == "all" else [args.feature]
    out_rows = []
    for name in names:
        series = rows[:, FEATURE_NAMES.index(name)]
        points = periodogram(series)
        if args.top > 0:
            points = detect_peaks(points, args.top)
        for pt in points:
            out_rows.append(
                {
                    "feature": name,
                    "period_days": pt.period,
                    "frequency": pt.frequency,
                    "power": pt.power,
                }
            )
    if args.format == "csv":
        with args.output.open("w", encoding="utf-8", newline="") as f:
            writer = csv.DictWriter(
                f, fieldnames=["feature", "period_days", "frequency", "power"],
                lineterminator="\n",
            )
            writer.writeheader()
            writer.writerows(out_rows)
    else:
        with args.output.open("w", encoding="utf-8") as f:
            json.dump(out_rows, f, indent=2)
            f.write("\n")
    log.info("wrote %d periodogram rows to %s", len(out_rows), args.output)


def _cmd_report(args) -> None:
    records = read_trace(args.trace)
    summaries = aggregate(records, period="day", scope=args.scope)
    emit_report(summaries, args.output, args.format)
    log.info("report -> %s", args.output)


_COMMANDS = {
    "simulate": _cmd_simulate,
    "summarize": _cmd_summarize,
    "train": _cmd_train,
    "gridsearch": _cmd_gridsearch,
    "periodogram": _cmd_periodogram,
    "report": _cmd_report,
}


def _setup_logging() -> None:
    level = os.environ.get("CACHESCOPE_LOG", "error").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(
        level=levels.get(level, logging.ERROR),
        format="%(levelname)s %(name)s: %(message)s",
    )


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    """Run one CLI invocation; returns the process exit code."""
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        _COMMANDS[args.command](args)
    except (CachescopeError, OSError, json.JSONDecodeError) as exc:
        print(f"cachescope {args.command}: {exc}", file=sys.stderr)
        return 2
    return 0


def main() -> None:
    sys.exit(run_cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
