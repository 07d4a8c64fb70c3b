"""Delay embedding, ridge-regression readout and the forecasting pipeline."""

from __future__ import annotations

import dataclasses
import json
import time
import warnings
from typing import Optional

import numpy as np
from numpy.linalg import LinAlgError

from . import data as data_mod
from .errors import PipelineError, QRCError, ReadoutError, SpecHashWarning
from .features import FeatureMatrix
from .metrics import evaluate
from .reports import ForecastReport
from .reservoir import QubitParams, ReservoirSpec, compute_features, sample_qubit_params

DEFAULT_DELTA = 6
DEFAULT_LAMBDA = 1e-4
DEFAULT_FRACTION = 0.6


def delay_embed(features: FeatureMatrix, delta: int) -> FeatureMatrix:
    """Stack lags ``0..delta`` of every feature row.

    Output column ``j`` corresponds to input column ``k = j + delta`` and
    holds ``[w(t_k); w(t_{k-1}); ...; w(t_{k-delta})]``.
    """
    if features.bias:
        raise ReadoutError("delay-embed before appending the bias row")
    if int(delta) != delta or delta < 0:
        raise ReadoutError(f"delay must be a non-negative integer, got {delta}")
    F, K = features.shape
    if K <= delta:
        raise ReadoutError(f"need more than {delta} columns to delay-embed, got {K}")
    blocks = [features.values[:, delta - lag : K - lag] for lag in range(delta + 1)]
    return FeatureMatrix(
        np.vstack(blocks),
        delay=features.delay + delta,
        spec_hash=features.spec_hash,
        washout=max(0, features.washout - delta),
    )


def square_augment(features: FeatureMatrix) -> FeatureMatrix:
    """Append element-wise squares of every row."""
    if features.bias:
        raise ReadoutError("augment before appending the bias row")
    return dataclasses.replace(features, values=np.vstack([features.values, features.values**2]))


def append_bias(features: FeatureMatrix) -> FeatureMatrix:
    if features.bias:
        raise ReadoutError("bias row already present")
    if features.cols == 0:
        raise ReadoutError("cannot append a bias row to a matrix without columns")
    values = np.vstack([features.values, np.ones((1, features.cols))])
    return dataclasses.replace(features, values=values, bias=True)


def design_matrix(raw: FeatureMatrix, delta: int, squared: bool = False) -> FeatureMatrix:
    """Raw readouts to regression design: delay, optional squares, bias."""
    W = delay_embed(raw, delta)
    if squared:
        W = square_augment(W)
    return append_bias(W)


@dataclasses.dataclass
class ReadoutModel:
    """Trained linear readout plus what is needed to reapply it."""

    coefficients: np.ndarray
    lam: float
    delta: int
    spec_hash: Optional[str] = None
    seed: Optional[int] = None
    bias: bool = True
    squared: bool = False
    scale: Optional[float] = None
    reservoir: Optional[dict] = None
    params: Optional[dict] = None

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=float)

    def to_dict(self) -> dict:
        return {
            "coefficients": self.coefficients.tolist(),
            "lambda": self.lam,
            "delta": self.delta,
            "spec_hash": self.spec_hash,
            "seed": self.seed,
            "bias": self.bias,
            "squared": self.squared,
            "scale": self.scale,
            "reservoir": self.reservoir,
            "params": self.params,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "ReadoutModel":
        return cls(
            np.array(d["coefficients"], dtype=float),
            d["lambda"],
            d["delta"],
            d.get("spec_hash"),
            d.get("seed"),
            d.get("bias", True),
            d.get("squared", False),
            d.get("scale"),
            d.get("reservoir"),
            d.get("params"),
        )

    @classmethod
    def from_json(cls, text: str) -> "ReadoutModel":
        return cls.from_dict(json.loads(text))


def ridge_fit(W: FeatureMatrix, Y, lam: float = DEFAULT_LAMBDA) -> ReadoutModel:
    """Solve ``X = Y W^T (W W^T + lam I)^{-1}`` without forming the inverse.

    ``lam = 0`` is plain least squares and requires ``W W^T`` to be
    non-singular.
    """
    values = W.values if isinstance(W, FeatureMatrix) else np.asarray(W, dtype=float)
    Y = np.asarray(Y, dtype=float)
    F, K = values.shape
    if K < 1:
        raise ReadoutError("ridge fit needs at least one column")
    if Y.shape != (K,):
        raise ReadoutError(f"target length {Y.shape} does not match {K} columns")
    if not (np.all(np.isfinite(values)) and np.all(np.isfinite(Y))):
        raise ReadoutError("non-finite entries in ridge inputs")
    if lam < 0:
        raise ReadoutError(f"lambda must be non-negative, got {lam}")
    gram = values @ values.T
    gram[np.diag_indices(F)] += lam
    rhs = values @ Y
    if lam == 0 and np.linalg.matrix_rank(gram) < F:
        raise ReadoutError("singular normal equations at lambda = 0")
    try:
        # The system matrix is symmetric, so X^T solves it directly.
        coef = np.linalg.solve(gram, rhs)
    except LinAlgError as exc:
        raise ReadoutError(f"singular normal equations: {exc}") from None
    spec_hash = W.spec_hash if isinstance(W, FeatureMatrix) else None
    delay = W.delay if isinstance(W, FeatureMatrix) else 0
    bias = W.bias if isinstance(W, FeatureMatrix) else False
    return ReadoutModel(coef, lam, delay, spec_hash, bias=bias)


def predict(model: ReadoutModel, W: FeatureMatrix) -> np.ndarray:
    """``Y_pred = X W``."""
    values = W.values if isinstance(W, FeatureMatrix) else np.asarray(W, dtype=float)
    if values.shape[0] != model.coefficients.shape[0]:
        raise ReadoutError(
            f"feature rows {values.shape[0]} do not match {model.coefficients.shape[0]} coefficients"
        )
    if isinstance(W, FeatureMatrix) and model.spec_hash and W.spec_hash and W.spec_hash != model.spec_hash:
        warnings.warn(
            f"readout trained on reservoir {model.spec_hash} applied to features from {W.spec_hash}",
            SpecHashWarning,
            stacklevel=2,
        )
    return model.coefficients @ values


class _stage:
    """Re-raise package errors tagged with the pipeline stage."""

    def __init__(self, name):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and isinstance(exc, QRCError) and not isinstance(exc, PipelineError):
            raise PipelineError(self.name, str(exc)) from exc
        return False


def _attach(model: ReadoutModel, spec: ReservoirSpec, params: QubitParams, scale, squared) -> ReadoutModel:
    model.seed = spec.seed
    model.squared = squared
    model.scale = scale
    model.reservoir = spec.to_dict()
    model.params = params.to_dict()
    return model


def forecast_pipeline(
    series: "data_mod.TimeSeries",
    spec: ReservoirSpec,
    delta: int = DEFAULT_DELTA,
    lam: float = DEFAULT_LAMBDA,
    fraction: float = DEFAULT_FRACTION,
    squared: bool = False,
    reduction: str = "mean",
    threads: int = 1,
    keep_predictions: bool = True,
    params: Optional[QubitParams] = None,
) -> ForecastReport:
    """Normalize, split, featurize, fit on the training part, score both parts.

    The series is split at ``n_train = floor(fraction * K)``.  A one-step pair
    (input ``u_k``, target ``u_{k+1}``) belongs to the training part when its
    target does, so the test targets are exactly the test points.  Features
    are computed in one pass, so test columns take their lag context from
    the true preceding inputs, including training-period ones.
    """
    start = time.perf_counter()
    with _stage("normalize"):
        norm = data_mod.normalize_max(series)
    with _stage("split"):
        split = data_mod.split_train_test(norm, fraction)
        n_train = len(split.train)
        inputs, targets = data_mod.make_targets(norm)
        n_fit = n_train - 1 - delta
        if n_fit < 1:
            raise PipelineError(
                "split", f"{n_train} training points leave no columns after a delay of {delta}"
            )
    with _stage("features"):
        if params is None:
            params = sample_qubit_params(spec)
        raw = compute_features(inputs, spec, params, threads=threads)
    with _stage("embed"):
        W = design_matrix(raw, delta, squared)
        y = targets[delta:]
    with _stage("fit"):
        model = ridge_fit(W.columns(slice(0, n_fit)), y[:n_fit], lam)
        _attach(model, spec, params, norm.scale, squared)
    with _stage("predict"):
        pred = predict(model, W)
    with _stage("metrics"):
        train_m = evaluate(y[:n_fit], pred[:n_fit], reduction)
        test_m = evaluate(y[n_fit:], pred[n_fit:], reduction)
    predictions = None
    if keep_predictions:
        index = np.arange(delta + 1, len(norm))
        predictions = {
            "index": index.tolist(),
            "actual": y.tolist(),
            "predicted": pred.tolist(),
            "partition": ["train"] * n_fit + ["test"] * (y.size - n_fit),
        }
    return ForecastReport(
        coords={"n_qubits": spec.n_qubits, "delta0": spec.delta0, "omega0": spec.omega0},
        train=train_m,
        test=test_m,
        config={
            "reservoir": spec.to_dict(),
            "readout": {"delta": delta, "lambda": lam, "fraction": fraction, "squared": squared},
            "metrics": {"sum_mse": reduction == "sum"},
        },
        seed=spec.seed,
        spec_hash=spec.spec_hash(),
        n_train=n_train,
        n_test=len(split.test),
        duration_s=time.perf_counter() - start,
        predictions=predictions,
        model=model,
        params=params,
    )


def train_readout(
    series: "data_mod.TimeSeries",
    spec: ReservoirSpec,
    delta: int = DEFAULT_DELTA,
    lam: float = DEFAULT_LAMBDA,
    squared: bool = False,
    threads: int = 1,
    params: Optional[QubitParams] = None,
):
    """Fit a readout on every one-step pair of ``series`` (no hold-out).

    Returns ``(model, params, targets, predictions)`` for the trimmed pairs.
    """
    norm = data_mod.normalize_max(series)
    inputs, targets = data_mod.make_targets(norm)
    if params is None:
        params = sample_qubit_params(spec)
    raw = compute_features(inputs, spec, params, threads=threads)
    W = design_matrix(raw, delta, squared)
    y = targets[delta:]
    model = _attach(ridge_fit(W, y, lam), spec, params, norm.scale, squared)
    return model, params, y, predict(model, W)


def cross_series_evaluate(
    model: ReadoutModel,
    params: QubitParams,
    new_series: "data_mod.TimeSeries",
    spec: ReservoirSpec,
    reuse_scale: bool = False,
    threads: int = 1,
):
    """Apply a trained readout to another series; returns ``(targets, predictions)``.

    Both have length ``K' - 1 - delta``: prediction ``j`` forecasts point
    ``j + delta + 1`` of the new series.
    """
    delta = model.delta
    if len(new_series) < delta + 2:
        raise ReadoutError(f"series {new_series.label!r} shorter than delay + 2 = {delta + 2}")
    if reuse_scale:
        if model.scale is None:
            raise ReadoutError("model carries no training scale to reuse")
        norm = data_mod.apply_scale(new_series, model.scale)
    else:
        norm = data_mod.normalize_max(new_series)
    inputs, targets = data_mod.make_targets(norm)
    raw = compute_features(inputs, spec, params, threads=threads)
    W = design_matrix(raw, delta, model.squared)
    if model.spec_hash is not None and model.spec_hash != W.spec_hash:
        warnings.warn(
            f"readout trained on reservoir {model.spec_hash} applied with spec {W.spec_hash}",
            SpecHashWarning,
            stacklevel=2,
        )
        W.spec_hash = model.spec_hash
    return targets[delta:], predict(model, W)


def cross_series_predict(model, params, new_series, spec, reuse_scale=False, threads=1) -> np.ndarray:
    """Predictions for ``new_series`` using the training reservoir draw."""
    return cross_series_evaluate(model, params, new_series, spec, reuse_scale, threads)[1]
