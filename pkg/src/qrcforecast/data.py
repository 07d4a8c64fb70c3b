"""Loading, normalizing, splitting and synthesizing input series."""

from __future__ import annotations

import csv
import dataclasses
import datetime as dt
import enum
import math
from pathlib import Path
from typing import Optional
from zoneinfo import ZoneInfo

import numpy as np

from .errors import DataError

EXCHANGE_TZ = ZoneInfo("America/New_York")


@dataclasses.dataclass
class TimeSeries:
    """A univariate series with optional ISO-8601 timestamps."""

    values: np.ndarray
    timestamps: Optional[list] = None
    label: str = ""
    scale: Optional[float] = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1:
            raise DataError("series values must be one-dimensional")
        if not np.all(np.isfinite(self.values)):
            raise DataError(f"series {self.label!r} contains non-finite values")
        if self.timestamps is not None and len(self.timestamps) != len(self.values):
            raise DataError("timestamps and values differ in length")

    def __len__(self):
        return self.values.shape[0]

    def slice(self, sl: slice) -> "TimeSeries":
        stamps = None if self.timestamps is None else list(self.timestamps[sl])
        return TimeSeries(self.values[sl].copy(), stamps, self.label, self.scale)

    def date(self) -> str:
        """Calendar date of the first timestamp, or '' when unknown."""
        if not self.timestamps:
            return ""
        return parse_timestamp(self.timestamps[0]).date().isoformat()


@dataclasses.dataclass
class DatasetSplit:
    train: TimeSeries
    test: TimeSeries
    fraction: float


def parse_timestamp(text: str) -> dt.datetime:
    """Parse ISO-8601 or epoch seconds; epoch and aware times go to exchange time."""
    text = str(text).strip()
    try:
        epoch = float(text)
    except ValueError:
        pass
    else:
        return dt.datetime.fromtimestamp(epoch, tz=dt.timezone.utc).astimezone(EXCHANGE_TZ)
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    try:
        stamp = dt.datetime.fromisoformat(text)
    except ValueError:
        raise DataError(f"unparseable timestamp {text!r}") from None
    if stamp.tzinfo is not None:
        stamp = stamp.astimezone(EXCHANGE_TZ)
    return stamp


def load_csv(path) -> TimeSeries:
    """Read a ``timestamp,volume`` CSV (timestamp column optional).

    Empty volume cells are rejected rather than imputed.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"input file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        fields = [f.strip() for f in (reader.fieldnames or [])]
        if "volume" not in fields:
            raise DataError(f"{path}: missing required 'volume' column")
        reader.fieldnames = fields
        has_time = "timestamp" in fields
        values, stamps = [], []
        # Row numbers count the header as row 1.
        for row_no, row in enumerate(reader, start=2):
            cell = (row.get("volume") or "").strip()
            try:
                value = float(cell)
            except ValueError:
                raise DataError(f"{path}: row {row_no}: non-numeric volume {cell!r}") from None
            if not math.isfinite(value):
                raise DataError(f"{path}: row {row_no}: non-finite volume {cell!r}")
            values.append(value)
            if has_time:
                stamps.append((row.get("timestamp") or "").strip())
    if not values:
        raise DataError(f"{path}: empty series")
    return TimeSeries(np.array(values), stamps if has_time else None, label=path.stem)


def write_csv(ts: TimeSeries, path) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        if ts.timestamps is not None:
            writer.writerow(["timestamp", "volume"])
            writer.writerows((t, repr(float(v))) for t, v in zip(ts.timestamps, ts.values))
        else:
            writer.writerow(["volume"])
            writer.writerows([repr(float(v))] for v in ts.values)


def normalize_max(ts: TimeSeries) -> TimeSeries:
    """Divide by the series maximum so the peak becomes 1."""
    if len(ts) == 0:
        raise DataError("cannot normalize an empty series")
    peak = float(np.max(ts.values))
    if not peak > 0:
        raise DataError(f"series {ts.label!r} has non-positive maximum {peak}")
    return TimeSeries(ts.values / peak, ts.timestamps, ts.label, peak)


def apply_scale(ts: TimeSeries, scale: float) -> TimeSeries:
    """Normalize with an externally supplied divisor (e.g. a training day's max)."""
    if not scale > 0:
        raise DataError(f"scale must be positive, got {scale}")
    return TimeSeries(ts.values / scale, ts.timestamps, ts.label, float(scale))


def train_count(n_points: int, fraction: float) -> int:
    return int(math.floor(fraction * n_points))


def split_train_test(ts: TimeSeries, fraction: float = 0.6) -> DatasetSplit:
    """Chronological split: the first ``floor(fraction * K)`` points train."""
    if not 0 < fraction < 1:
        raise DataError(f"fraction must lie in (0, 1), got {fraction}")
    n_train = train_count(len(ts), fraction)
    if n_train < 1 or n_train >= len(ts):
        raise DataError(f"degenerate split of {len(ts)} points at fraction {fraction}")
    return DatasetSplit(ts.slice(slice(0, n_train)), ts.slice(slice(n_train, None)), fraction)


def make_targets(ts: TimeSeries):
    """One-step pairs: inputs ``u[0..K-2]`` and targets ``u[1..K-1]``."""
    if len(ts) < 2:
        raise DataError("series too short for one-step targets (need K >= 2)")
    return ts.values[:-1].copy(), ts.values[1:].copy()


class Session(str, enum.Enum):
    PRE = "pre"
    IN = "in"
    AFTER = "after"


# Inclusive minute-of-day windows in exchange time.
SESSION_WINDOWS = {
    Session.PRE: (4 * 60, 9 * 60 + 29),
    Session.IN: (9 * 60 + 30, 16 * 60),
    Session.AFTER: (16 * 60 + 1, 20 * 60),
}


def session_of(stamp: dt.datetime) -> Optional[Session]:
    minute = stamp.hour * 60 + stamp.minute
    for session, (lo, hi) in SESSION_WINDOWS.items():
        if lo <= minute <= hi:
            return session
    return None


def split_sessions(ts: TimeSeries) -> dict:
    """Partition a timestamped intraday series into pre/in/after-market parts.

    Samples outside 4:00-20:00 exchange time are dropped.  Sessions with no
    samples are omitted from the result.
    """
    if ts.timestamps is None:
        raise DataError("session splitting requires timestamps")
    buckets = {s: [] for s in Session}
    for i, text in enumerate(ts.timestamps):
        session = session_of(parse_timestamp(text))
        if session is not None:
            buckets[session].append(i)
    out = {}
    for session, idx in buckets.items():
        if idx:
            out[session] = TimeSeries(
                ts.values[idx],
                [ts.timestamps[i] for i in idx],
                f"{ts.label}_{session.value}",
            )
    return out


class SyntheticKind(str, enum.Enum):
    SINE = "sine"
    NOISY_SINE = "noisy_sine"
    RANDOM_WALK = "random_walk"
    GAUSSIAN_IID = "gaussian_iid"


def gen_synthetic(
    kind,
    length: int,
    seed: Optional[int] = None,
    period: float = 16.0,
    phase: float = 0.0,
    sigma: float = 0.05,
    mean: float = 0.0,
    label: Optional[str] = None,
) -> TimeSeries:
    """Generate a synthetic test series.

    * ``sine``: ``0.5 + 0.45 sin(2 pi k / period + phase)``
    * ``noisy_sine``: sine plus Gaussian noise of std ``sigma``
    * ``random_walk``: cumulative Gaussian steps of std ``sigma``, min-max
      rescaled to [0, 1]
    * ``gaussian_iid``: normal samples with ``mean`` and std ``sigma``
    """
    try:
        kind = SyntheticKind(kind)
    except ValueError:
        raise DataError(f"unknown synthetic kind {kind!r}") from None
    if int(length) != length or length < 1:
        raise DataError(f"length must be a positive integer, got {length}")
    if kind is not SyntheticKind.SINE and seed is None:
        raise DataError(f"{kind.value} requires a seed")
    if kind in (SyntheticKind.SINE, SyntheticKind.NOISY_SINE) and not period > 0:
        raise DataError(f"period must be positive, got {period}")
    if not sigma >= 0:
        raise DataError(f"sigma must be non-negative, got {sigma}")
    k = np.arange(length)
    if kind in (SyntheticKind.SINE, SyntheticKind.NOISY_SINE):
        values = 0.5 + 0.45 * np.sin(2 * np.pi * k / period + phase)
        if kind is SyntheticKind.NOISY_SINE:
            values = values + np.random.default_rng(seed).normal(0.0, sigma, length)
    elif kind is SyntheticKind.RANDOM_WALK:
        walk = np.cumsum(np.random.default_rng(seed).normal(0.0, sigma, length))
        span = walk.max() - walk.min()
        values = (walk - walk.min()) / span if span > 0 else np.full(length, 0.5)
        values = np.clip(values, 0.0, 1.0)
    else:
        values = np.random.default_rng(seed).normal(mean, sigma, length)
    return TimeSeries(values, None, label or kind.value)
