"""Forecast quality metrics.

MSE uses the mean convention by default; ``reduction="sum"`` gives the
plain sum of squared errors.  Variances are population variances.
"""

from __future__ import annotations

import dataclasses
import enum
import math

import numpy as np

from .errors import SpecError

# Targets smaller than this are excluded from MAPE.
MAPE_ZERO = 1e-12
# Slack when comparing MAPE against band edges (10.000000000000002 is Good).
_BAND_SLACK = 1e-9


class MapeCategory(str, enum.Enum):
    EXCELLENT = "excellent"
    GOOD = "good"
    REASONABLE = "reasonable"
    POOR = "poor"


def _pair(y, yhat):
    y = np.asarray(y, dtype=float)
    yhat = np.asarray(yhat, dtype=float)
    if y.shape != yhat.shape or y.ndim != 1:
        raise SpecError(f"length mismatch: {y.shape} vs {yhat.shape}")
    if y.size == 0:
        raise SpecError("metrics need at least one point")
    return y, yhat


def mse(y, yhat, reduction: str = "mean") -> float:
    y, yhat = _pair(y, yhat)
    sq = np.abs(y - yhat) ** 2
    if reduction == "mean":
        return float(np.mean(sq))
    if reduction == "sum":
        return float(np.sum(sq))
    raise SpecError(f"unknown reduction {reduction!r}")


def nmse(y, yhat, reduction: str = "mean") -> float:
    y, yhat = _pair(y, yhat)
    var = float(np.var(y))
    if var == 0:
        raise SpecError("zero-variance target: NMSE undefined")
    return mse(y, yhat, reduction) / var


def rmse(y, yhat, reduction: str = "mean") -> float:
    return math.sqrt(mse(y, yhat, reduction))


def mape_category(percent: float) -> MapeCategory:
    if percent <= 5 + _BAND_SLACK:
        return MapeCategory.EXCELLENT
    if percent <= 10 + _BAND_SLACK:
        return MapeCategory.GOOD
    if percent <= 20 + _BAND_SLACK:
        return MapeCategory.REASONABLE
    return MapeCategory.POOR


def mape(y, yhat):
    """Mean absolute percentage error and its quality band.

    Returns ``(percent, category, n_excluded)`` where ``n_excluded`` counts
    near-zero targets left out of the average.
    """
    y, yhat = _pair(y, yhat)
    keep = np.abs(y) >= MAPE_ZERO
    if not np.any(keep):
        raise SpecError("all targets are zero: MAPE undefined")
    percent = float(100.0 * np.mean(np.abs((y[keep] - yhat[keep]) / y[keep])))
    return percent, mape_category(percent), int(np.sum(~keep))


def direction_accuracy(y, yhat):
    """Fraction of steps whose predicted move sign matches the actual one.

    Signs are compared exactly in {+, -, 0}.  Returns ``(da, ties)`` where
    ``ties`` counts steps with a zero actual or predicted move.
    """
    y, yhat = _pair(y, yhat)
    if y.size < 2:
        raise SpecError("direction accuracy needs at least two points")
    actual = np.sign(np.diff(y))
    pred = np.sign(np.diff(yhat))
    correct = int(np.sum(actual == pred))
    ties = int(np.sum((actual == 0) | (pred == 0)))
    return correct / actual.size, ties


@dataclasses.dataclass
class MetricsReport:
    mse: float
    nmse: float
    rmse: float
    mape_percent: float
    mape_category: str
    da: float
    n_points: int
    n_ties: int
    diagnostics: list = dataclasses.field(default_factory=list)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        for key, value in out.items():
            if isinstance(value, float) and not math.isfinite(value):
                out[key] = None
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "MetricsReport":
        data = dict(data)
        for key in ("mse", "nmse", "rmse", "mape_percent", "da"):
            if data.get(key) is None:
                data[key] = math.nan
        return cls(**data)


def evaluate(y, yhat, reduction: str = "mean") -> MetricsReport:
    """All metrics at once; undefined quantities become NaN with a diagnostic."""
    y, yhat = _pair(y, yhat)
    notes = []
    err = mse(y, yhat, reduction)
    var = float(np.var(y))
    if var > 0:
        norm = err / var
    else:
        norm = math.nan
        notes.append("zero-variance target: nmse undefined")
    try:
        percent, band, excluded = mape(y, yhat)
        band = band.value
        if excluded:
            notes.append(f"mape excluded {excluded} zero targets")
    except SpecError:
        percent, band = math.nan, "undefined"
        notes.append("all targets zero: mape undefined")
    da, ties = math.nan, 0
    if y.size >= 2:
        da, ties = direction_accuracy(y, yhat)
        if np.all(np.diff(y) == 0):
            da = math.nan
            notes.append("flat series: direction accuracy undefined (all ties)")
    else:
        notes.append("single point: direction accuracy undefined")
    return MetricsReport(err, norm, math.sqrt(err), percent, band, da, int(y.size), ties, notes)
