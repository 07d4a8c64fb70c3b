"""Command-line entry point.

Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

from . import data as data_mod
from . import harness
from .baselines.compare import MODEL_NAMES
from .config import load_config, parse_config
from .errors import QRCError, SpecError

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2

COMMANDS = ("forecast", "sweep", "cross-day", "smr", "benchmark", "synth")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--seed", type=int, help="reservoir seed (overrides config)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--threads", type=int, default=1, help="worker threads (default 1)")
    common.add_argument("--models", help=f"comma-separated subset of {','.join(MODEL_NAMES)}")
    common.add_argument("--csv", help="input CSV (overrides config input)")
    common.add_argument("--yes", action="store_true", help="skip the 6-qubit cost confirmation")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="qrcforecast", description="Quantum reservoir forecasting toolkit")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True
    sub.add_parser("forecast", parents=[common], help="single forecasting run")
    sub.add_parser("sweep", parents=[common], help="grid over (N, delta0, omega0)")
    sub.add_parser("cross-day", parents=[common], help="train once, score later series")
    p_smr = sub.add_parser("smr", parents=[common], help="standardized moment ratios")
    p_smr.add_argument("inputs", nargs="*", help="CSV files (override smr.inputs)")
    sub.add_parser("benchmark", parents=[common], help="compare MLP, ESN, QIESN and QRC")
    p_syn = sub.add_parser("synth", parents=[common], help="write a synthetic series as CSV")
    p_syn.add_argument("--kind", default="sine", choices=[k.value for k in data_mod.SyntheticKind])
    p_syn.add_argument("--length", type=int, default=400)
    p_syn.add_argument("--period", type=float, default=16.0)
    p_syn.add_argument("--phase", type=float, default=0.0)
    p_syn.add_argument("--sigma", type=float, default=0.05)
    p_syn.add_argument("--count", type=int, default=1, help="number of files (phase-shifted by --phase-step)")
    p_syn.add_argument("--phase-step", type=float, default=0.0)
    return parser


def _apply_overrides(args):
    cfg = load_config(args.config)
    raw = cfg.snapshot()
    if args.seed is not None:
        raw["reservoir"]["seed"] = args.seed
    if args.csv is not None:
        raw["input"] = {"csv": str(Path(args.csv).resolve())}
    if args.models is not None:
        names = [m.strip() for m in args.models.split(",") if m.strip()]
        raw["benchmark"]["models"] = names
    if getattr(args, "inputs", None):
        raw["smr"]["inputs"] = [{"csv": str(Path(p).resolve())} for p in args.inputs]
    # Paths in the snapshot are already absolute.
    return parse_config(raw)


def _confirm(args):
    def ask():
        if args.yes:
            return True
        if not sys.stdin.isatty():
            return False
        return input("proceed? [y/N] ").strip().lower() in ("y", "yes")

    return ask


def _run_synth(args) -> None:
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    seed = args.seed if args.seed is not None else 0
    for i in range(args.count):
        phase = args.phase + i * args.phase_step
        label = f"{args.kind}_{i}" if args.count > 1 else args.kind
        ts = data_mod.gen_synthetic(args.kind, args.length, seed + i, args.period, phase, args.sigma, label=label)
        data_mod.write_csv(ts, out / f"{label}.csv")
        print(out / f"{label}.csv")


def _dispatch(args) -> None:
    if args.threads < 1:
        raise UsageError("--threads must be at least 1")
    if args.command == "synth":
        _run_synth(args)
        return
    cfg = _apply_overrides(args)
    start = time.perf_counter()
    if args.command == "forecast":
        n = len(harness.load_input(cfg.input)) if cfg.input is not None else 0
        harness.guard_large([cfg.reservoir], n, _confirm(args))
        rep = harness.run_forecast(cfg, args.out, args.threads)
        print(
            f"forecast {rep.coords}: test DA {rep.test.da:.4f} NMSE {rep.test.nmse:.4g} "
            f"MAPE {rep.test.mape_percent:.3f}% ({rep.test.mape_category})"
        )
    elif args.command == "sweep":
        n = len(harness.load_input(cfg.input)) if cfg.input is not None else 0
        harness.guard_large(harness.sweep_specs(cfg), n, _confirm(args))
        rows, failures, best = harness.run_sweep(cfg, args.out, args.threads)
        print(f"sweep: {len(rows)} rows, {len(failures)} failures; best DA {best['da']['value']} at {best['da']['points']}")
        for f in failures:
            print(f"  failed N={f['N']} delta0={f['delta0']} omega0={f['omega0']}: {f['error']}", file=sys.stderr)
    elif args.command == "cross-day":
        harness.guard_large([cfg.reservoir], 0, _confirm(args))
        rows, summary = harness.run_cross_day(cfg, args.out, args.threads)
        for row in rows:
            print(f"{row['label']} {row['date']}: DA {row['da']:.4f} over {row['n_points']} points ({row['ties']} ties)")
        for f in summary["failures"]:
            print(f"  failed {f['label']}: {f['error']}", file=sys.stderr)
    elif args.command == "smr":
        result = harness.run_smr(cfg, out_dir=args.out)
        for prof in result["profiles"]:
            print(f"{prof.label}: {harness.classify_tail(prof, cfg.smr.slack).value}")
    elif args.command == "benchmark":
        harness.guard_large([cfg.reservoir], 0, _confirm(args))
        report = harness.run_benchmark(cfg, args.out, args.threads)
        for row in report.csv_rows():
            tail = f"error: {row['error']}" if row["error"] else f"DA {row['da']:.4f} NMSE {row['nmse']:.4g}"
            print(f"{row['label']} {row['model']}: {tail}")
    logging.getLogger(__name__).info("%s finished in %s", args.command, harness.elapsed(start))


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        _dispatch(args)
    except (UsageError, SpecError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (QRCError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
