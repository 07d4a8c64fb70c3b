"""Run orchestration: forecasts, sweeps, cross-day transfer, SMR, benchmarks.

Each ``run_*`` function takes a validated :class:`RunConfig`, writes its
outputs under ``out_dir`` (when given) and returns the in-memory result.
"""

from __future__ import annotations

import csv
import hashlib
import itertools
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional

import numpy as np

from .baselines.compare import benchmark_compare
from .config import RunConfig, load_input
from .errors import DataError, QRCError, SpecError
from .metrics import direction_accuracy
from .moments import classify_tail, correlation_matrix, smr_profile
from .readout import (
    ReadoutModel,
    cross_series_evaluate,
    forecast_pipeline,
    train_readout,
)
from .reports import ForecastReport, dumps
from .reservoir import QubitParams, ReservoirSpec

log = logging.getLogger(__name__)

SWEEP_COLUMNS = ("N", "delta0", "omega0", "mse", "nmse", "rmse", "mape", "da")
CROSS_DAY_COLUMNS = ("label", "date", "da", "n_points", "ties")
SMR_COLUMNS = ("label", "n", "gamma_emp", "smr", "tail_class")


def _fmt(value):
    if isinstance(value, float):
        return "" if not math.isfinite(value) else repr(value)
    return value


def write_csv(path, columns, rows) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row.get(c, "")) for c in columns])


def _out(out_dir) -> Optional[Path]:
    if out_dir is None:
        return None
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def point_seed(base_seed: int, n_qubits: int, delta0: float, omega0: float) -> int:
    """Stable 64-bit seed for one sweep point, independent of scheduling."""
    key = f"{int(base_seed)}|{int(n_qubits)}|{float(delta0)!r}|{float(omega0)!r}"
    return int.from_bytes(hashlib.sha256(key.encode()).digest()[:8], "little")


def _reproducible(report: ForecastReport, cfg: RunConfig) -> ForecastReport:
    # Embed the full run config so the report alone reproduces the run.
    report.config = cfg.snapshot()
    return report


def run_forecast(cfg: RunConfig, out_dir=None, threads: int = 1) -> ForecastReport:
    """One forecasting run; writes report.json, predictions.csv, model.json."""
    if cfg.input is None:
        raise SpecError("forecast needs an 'input' section (csv or synthetic)")
    series = load_input(cfg.input)
    r = cfg.readout
    report = forecast_pipeline(
        series,
        cfg.reservoir,
        r.delta,
        r.lam,
        r.fraction,
        squared=r.squared,
        reduction=cfg.reduction,
        threads=threads,
        keep_predictions=True,
    )
    _reproducible(report, cfg)
    out = _out(out_dir)
    if out is not None:
        preds = report.predictions
        rows = [
            {"index": i, "actual": a, "predicted": p, "partition": part}
            for i, a, p, part in zip(preds["index"], preds["actual"], preds["predicted"], preds["partition"])
        ]
        write_csv(out / "predictions.csv", ("index", "actual", "predicted", "partition"), rows)
        (out / "model.json").write_text(report.model.to_json(), encoding="utf-8")
    if not cfg.output.predictions:
        report.predictions = None
    if out is not None:
        (out / "report.json").write_text(report.to_json(), encoding="utf-8")
    return report


def _sweep_point(cfg: RunConfig, series, n: int, d0: float, o0: float) -> dict:
    spec = cfg.reservoir.replace(
        n_qubits=int(n), delta0=float(d0), omega0=float(o0), seed=point_seed(cfg.reservoir.seed, n, d0, o0)
    )
    r = cfg.readout
    rep = forecast_pipeline(
        series, spec, r.delta, r.lam, r.fraction, squared=r.squared, reduction=cfg.reduction, keep_predictions=False
    )
    t = rep.test
    return {
        "N": int(n),
        "delta0": float(d0),
        "omega0": float(o0),
        "mse": t.mse,
        "nmse": t.nmse,
        "rmse": t.rmse,
        "mape": t.mape_percent,
        "da": t.da,
    }


def best_parameters(rows: list) -> dict:
    """Arg-max DA and arg-min of each error metric; ties list every point."""
    summary = {}
    targets = {"da": max, "mse": min, "nmse": min, "mape": min, "rmse": min}
    for metric, pick in targets.items():
        finite = [row for row in rows if isinstance(row[metric], float) and math.isfinite(row[metric])]
        if not finite:
            summary[metric] = {"value": None, "points": []}
            continue
        best = pick(row[metric] for row in finite)
        points = [[row["N"], row["delta0"], row["omega0"]] for row in finite if row[metric] == best]
        summary[metric] = {"value": best, "points": points}
    return summary


def run_sweep(cfg: RunConfig, out_dir=None, threads: int = 1):
    """Grid over (N, delta0, omega0); returns (rows, failures, best).

    Points run concurrently; each has its own seed, and rows are sorted by
    coordinates before writing, so output does not depend on ``threads``.
    """
    if cfg.input is None:
        raise SpecError("sweep needs an 'input' section (csv or synthetic)")
    series = load_input(cfg.input)
    grid = list(itertools.product(cfg.sweep.n_qubits, cfg.sweep.delta0, cfg.sweep.omega0))
    print(f"sweep: {len(grid)} grid points")

    def task(point):
        try:
            return _sweep_point(cfg, series, *point), None
        except QRCError as exc:
            return None, {"N": point[0], "delta0": point[1], "omega0": point[2], "error": str(exc)}

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(task, grid))
    else:
        results = [task(p) for p in grid]
    key = lambda row: (row["N"], row["delta0"], row["omega0"])  # noqa: E731
    rows = sorted((r for r, _ in results if r is not None), key=key)
    failures = sorted((f for _, f in results if f is not None), key=key)
    best = best_parameters(rows)
    out = _out(out_dir)
    if out is not None:
        write_csv(out / "sweep.csv", SWEEP_COLUMNS, rows)
        write_csv(out / "sweep_failures.csv", ("N", "delta0", "omega0", "error"), failures)
        summary = {"grid_size": len(grid), "failures": len(failures), "best": best, "config": cfg.snapshot()}
        (out / "sweep_best.json").write_text(dumps(summary), encoding="utf-8")
    return rows, failures, best


def _load_model(path):
    model = ReadoutModel.from_json(Path(path).read_text(encoding="utf-8"))
    if model.reservoir is None or model.params is None:
        raise DataError(f"{path}: model file lacks reservoir spec or parameters")
    return model, ReservoirSpec.from_dict(model.reservoir), QubitParams.from_dict(model.params)


def run_cross_day(cfg: RunConfig, out_dir=None, threads: int = 1):
    """Train on one series, report direction accuracy on each future series.

    Returns ``(rows, summary)``.  The readout is fitted on every one-step
    pair of the training series, or loaded from ``cross_day.model``.
    """
    cd = cfg.cross_day
    r = cfg.readout
    summary = {}
    if cd.model is not None:
        model, spec, params = _load_model(cd.model)
        summary["model"] = cd.model
    else:
        if cd.train is None:
            raise SpecError("cross_day needs 'train' or 'model'")
        train_ts = load_input(cd.train)
        model, params, y, pred = train_readout(
            train_ts, cfg.reservoir, r.delta, r.lam, squared=r.squared, threads=threads
        )
        spec = cfg.reservoir
        da, ties = direction_accuracy(y, pred)
        summary.update(train_label=train_ts.label, train_da=da, train_ties=ties, train_points=int(y.size))
    rows, failures = [], []
    for section in cd.future:
        label = section.csv or (section.synthetic.label if section.synthetic else "")
        try:
            ts = load_input(section)
            label = ts.label
            y, pred = cross_series_evaluate(model, params, ts, spec, cd.reuse_train_scale, threads)
            da, ties = direction_accuracy(y, pred)
            rows.append({"label": ts.label, "date": ts.date(), "da": da, "n_points": int(y.size), "ties": ties})
        except QRCError as exc:
            failures.append({"label": label, "error": str(exc)})
    summary["failures"] = failures
    out = _out(out_dir)
    if out is not None:
        write_csv(out / "cross_day.csv", CROSS_DAY_COLUMNS, rows)
        (out / "model.json").write_text(model.to_json(), encoding="utf-8")
        (out / "cross_day_summary.json").write_text(dumps({**summary, "config": cfg.snapshot()}), encoding="utf-8")
    return rows, summary


def run_smr(cfg: RunConfig, series_list=None, out_dir=None):
    """SMR profiles, tail classes and correlation matrices for many series."""
    s = cfg.smr
    if series_list is None:
        series_list = [load_input(section) for section in s.inputs]
    if not series_list:
        raise SpecError("smr needs at least one input series")
    profiles, rows, failures = [], [], []
    for ts in series_list:
        try:
            prof = smr_profile(ts.values, s.orders, ts.label)
            tail = classify_tail(prof, s.slack).value
        except QRCError as exc:
            failures.append({"label": ts.label, "error": str(exc)})
            continue
        profiles.append(prof)
        for n, g, ratio in zip(prof.orders, prof.gamma_emp, prof.smr):
            rows.append({"label": prof.label, "n": int(n), "gamma_emp": float(g), "smr": float(ratio), "tail_class": tail})
    result = {"profiles": profiles, "rows": rows, "failures": failures, "correlations": {}, "notices": []}
    if len(profiles) < 2:
        result["notices"].append("fewer than two valid series: correlation matrices omitted")
    else:
        for name, orders in (("all", s.orders), ("high", s.subset)):
            try:
                result["correlations"][name] = correlation_matrix(profiles, orders)
            except QRCError as exc:
                result["notices"].append(f"{name}-order correlation unavailable: {exc}")
    for failure in failures:
        result["notices"].append(f"{failure['label']}: {failure['error']}")
    for name, corr in result["correlations"].items():
        print(f"smr {name} orders {corr.orders}: min {corr.min_offdiag:.4f} max {corr.max_offdiag:.4f}")
    for notice in result["notices"]:
        print(f"smr notice: {notice}")
    out = _out(out_dir)
    if out is not None:
        write_csv(out / "smr_profiles.csv", SMR_COLUMNS, rows)
        for name, corr in result["correlations"].items():
            mat_rows = [{"label": lab, **dict(zip(corr.labels, map(float, row)))} for lab, row in zip(corr.labels, corr.matrix)]
            write_csv(out / f"smr_corr_{name}.csv", ["label", *corr.labels], mat_rows)
        summary = {
            name: {"orders": c.orders, "min": c.min_offdiag, "max": c.max_offdiag}
            for name, c in result["correlations"].items()
        }
        summary["notices"] = result["notices"]
        (out / "smr_summary.json").write_text(dumps(summary), encoding="utf-8")
    return result


def run_benchmark(cfg: RunConfig, out_dir=None, threads: int = 1, models=None):
    """Four-way model comparison on the configured input series."""
    if cfg.input is None:
        raise SpecError("benchmark needs an 'input' section (csv or synthetic)")
    series = load_input(cfg.input)
    b = cfg.benchmark
    r = cfg.readout
    report = benchmark_compare(
        [series],
        cfg.reservoir,
        b.esn,
        b.qiesn,
        b.mlp,
        models=models or b.models,
        delta=r.delta,
        lam=r.lam,
        fraction=r.fraction,
        reduction=cfg.reduction,
        threads=threads,
    )
    out = _out(out_dir)
    if out is not None:
        (out / "benchmark.json").write_text(report.to_json(), encoding="utf-8")
        write_csv(
            out / "benchmark.csv",
            ("label", "model", "mse", "nmse", "rmse", "mape", "da", "n_points", "error"),
            report.csv_rows(),
        )
    return report


def guard_large(specs, n_samples: int, confirm) -> None:
    """Print a cost estimate for 6-qubit runs; ``confirm()`` must approve."""
    from .reservoir import estimate_cost

    big = [s for s in specs if s.n_qubits >= 6]
    if not big:
        return
    cost = sum(estimate_cost(s, n_samples) for s in big)
    print(f"warning: {len(big)} run(s) at N=6, about {cost:.3g} operations (samples x steps x dim^3)")
    if not confirm():
        raise SpecError("6-qubit run not confirmed; pass --yes to proceed")


def sweep_specs(cfg: RunConfig):
    return [
        cfg.reservoir.replace(n_qubits=n, delta0=float(d), omega0=float(o))
        for n, d, o in itertools.product(cfg.sweep.n_qubits, cfg.sweep.delta0, cfg.sweep.omega0)
    ]


def elapsed(start: float) -> str:
    return f"{time.perf_counter() - start:.1f}s"


__all__ = [
    "best_parameters",
    "point_seed",
    "run_benchmark",
    "run_cross_day",
    "run_forecast",
    "run_smr",
    "run_sweep",
    "write_csv",
    "np",
]
