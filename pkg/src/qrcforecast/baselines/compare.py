"""Run every model on the same split of the same series and tally who wins."""

from __future__ import annotations

import dataclasses
import json
import math
from typing import Optional, Sequence

import numpy as np

from .. import data as data_mod
from ..metrics import MetricsReport, evaluate
from ..readout import DEFAULT_DELTA, DEFAULT_FRACTION, DEFAULT_LAMBDA, append_bias, forecast_pipeline, predict, ridge_fit
from ..reports import dumps
from ..reservoir import ReservoirSpec
from .esn import QIESN_SPEC, EsnSpec, esn_features
from .mlp import MlpSpec, mlp_predict, mlp_train, window_dataset

MODEL_NAMES = ("mlp", "esn", "qiesn", "qrc")

# True when a smaller value is better.
METRICS = {"mse": True, "nmse": True, "rmse": True, "mape_percent": True, "da": False}


@dataclasses.dataclass
class ComparisonReport:
    models: list
    series: list  # [{"label": str, "results": {model: {"train", "test"} or {"error"}}}]
    wins: dict
    pairwise: dict
    config: dict = dataclasses.field(default_factory=dict)

    def to_dict(self) -> dict:
        series = []
        for entry in self.series:
            results = {}
            for name, res in entry["results"].items():
                if "error" in res:
                    results[name] = {"error": res["error"]}
                else:
                    results[name] = {"train": res["train"].to_dict(), "test": res["test"].to_dict()}
            series.append({"label": entry["label"], "results": results})
        return {
            "models": list(self.models),
            "series": series,
            "wins": self.wins,
            "pairwise": self.pairwise,
            "config": self.config,
        }

    def to_json(self) -> str:
        return dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "ComparisonReport":
        series = []
        for entry in d["series"]:
            results = {}
            for name, res in entry["results"].items():
                if "error" in res:
                    results[name] = {"error": res["error"]}
                else:
                    results[name] = {
                        "train": MetricsReport.from_dict(res["train"]),
                        "test": MetricsReport.from_dict(res["test"]),
                    }
            series.append({"label": entry["label"], "results": results})
        return cls(list(d["models"]), series, d["wins"], d["pairwise"], d.get("config", {}))

    @classmethod
    def from_json(cls, text: str) -> "ComparisonReport":
        return cls.from_dict(json.loads(text))

    def csv_rows(self) -> list:
        """One row per (series, model) with the test metrics."""
        rows = []
        for entry in self.series:
            for name in self.models:
                res = entry["results"].get(name)
                if res is None:
                    continue
                row = {"label": entry["label"], "model": name, "error": res.get("error", "")}
                if "test" in res:
                    t = res["test"]
                    row.update(
                        mse=t.mse, nmse=t.nmse, rmse=t.rmse, mape=t.mape_percent, da=t.da, n_points=t.n_points
                    )
                rows.append(row)
        return rows


def _better(a: float, b: float, lower: bool) -> bool:
    if not math.isfinite(a):
        return False
    if not math.isfinite(b):
        return True
    return a < b if lower else a > b


def compare_reports(per_series: Sequence[dict], models: Sequence[str]):
    """Win tallies from ``[{model: MetricsReport or None}, ...]``.

    A model wins a metric on a series only when it is strictly better than
    every other model; exact ties give no winner.  ``pairwise[m][a][b]``
    counts series where ``a`` beats ``b`` on metric ``m``.
    """
    wins = {m: {name: 0 for name in models} for m in METRICS}
    pairwise = {m: {a: {b: 0 for b in models if b != a} for a in models} for m in METRICS}
    for results in per_series:
        for metric, lower in METRICS.items():
            scores = {
                name: getattr(rep, metric) if rep is not None else math.nan
                for name, rep in ((n, results.get(n)) for n in models)
            }
            for a in models:
                for b in models:
                    if a != b and _better(scores[a], scores[b], lower):
                        pairwise[metric][a][b] += 1
            for a in models:
                if all(_better(scores[a], scores[b], lower) for b in models if b != a):
                    wins[metric][a] += 1
    return wins, pairwise


def esn_forecast(norm: np.ndarray, n_train: int, spec: EsnSpec, lam: float):
    """Ridge readout on ESN states; returns (y_train, p_train, y_test, p_test)."""
    inputs, targets = norm[:-1], norm[1:]
    W = append_bias(esn_features(inputs, spec))
    lo, hi = spec.washout, n_train - 1
    if hi - lo < 1:
        raise data_mod.DataError(f"washout {spec.washout} leaves no ESN training columns")
    model = ridge_fit(W.columns(slice(lo, hi)), targets[lo:hi], lam)
    pred = predict(model, W)
    return targets[lo:hi], pred[lo:hi], targets[hi:], pred[hi:]


def mlp_forecast(norm: np.ndarray, n_train: int, spec: MlpSpec):
    X_tr, y_tr = window_dataset(norm, spec.window, spec.window, n_train)
    X_te, y_te = window_dataset(norm, spec.window, n_train, norm.size)
    model = mlp_train(X_tr, y_tr, spec)
    return y_tr, mlp_predict(model, X_tr), y_te, mlp_predict(model, X_te)


def benchmark_compare(
    series_list,
    qrc_spec: Optional[ReservoirSpec] = None,
    esn_spec: Optional[EsnSpec] = None,
    qiesn_spec: Optional[EsnSpec] = None,
    mlp_spec: Optional[MlpSpec] = None,
    models: Sequence[str] = MODEL_NAMES,
    delta: int = DEFAULT_DELTA,
    lam: float = DEFAULT_LAMBDA,
    fraction: float = DEFAULT_FRACTION,
    reduction: str = "mean",
    threads: int = 1,
) -> ComparisonReport:
    """Score the requested models on each series' test partition.

    All models forecast the same targets (the test points of the max-normalized
    series).  A failing model is recorded with its error message and counts
    as losing every comparison.
    """
    if isinstance(series_list, data_mod.TimeSeries):
        series_list = [series_list]
    unknown = set(models) - set(MODEL_NAMES)
    if unknown:
        raise ValueError(f"unknown models {sorted(unknown)}; choose from {MODEL_NAMES}")
    models = [m for m in MODEL_NAMES if m in models]
    qrc_spec = qrc_spec or ReservoirSpec()
    esn_spec = esn_spec or EsnSpec()
    qiesn_spec = qiesn_spec or QIESN_SPEC
    mlp_spec = mlp_spec or MlpSpec()

    entries, tallies = [], []
    for ts in series_list:
        norm = data_mod.normalize_max(ts)
        n_train = data_mod.split_train_test(norm, fraction).train.values.size
        results, test_reports = {}, {}
        for name in models:
            try:
                if name == "qrc":
                    rep = forecast_pipeline(
                        ts, qrc_spec, delta, lam, fraction, reduction=reduction, threads=threads, keep_predictions=False
                    )
                    res = {"train": rep.train, "test": rep.test}
                else:
                    if name == "mlp":
                        parts = mlp_forecast(norm.values, n_train, mlp_spec)
                    else:
                        spec = esn_spec if name == "esn" else qiesn_spec
                        parts = esn_forecast(norm.values, n_train, spec, lam)
                    res = {
                        "train": evaluate(parts[0], parts[1], reduction),
                        "test": evaluate(parts[2], parts[3], reduction),
                    }
                test_reports[name] = res["test"]
            except Exception as exc:  # isolate per-model failures
                res = {"error": f"{type(exc).__name__}: {exc}"}
                test_reports[name] = None
            results[name] = res
        entries.append({"label": ts.label, "results": results})
        tallies.append(test_reports)
    wins, pairwise = compare_reports(tallies, models)
    config = {
        "models": models,
        "reservoir": qrc_spec.to_dict(),
        "esn": esn_spec.to_dict(),
        "qiesn": qiesn_spec.to_dict(),
        "mlp": mlp_spec.to_dict(),
        "readout": {"delta": delta, "lambda": lam, "fraction": fraction},
    }
    return ComparisonReport(models, entries, wins, pairwise, config)
