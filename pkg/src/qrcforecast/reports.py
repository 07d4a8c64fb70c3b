"""Serializable run reports."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from typing import Any, Optional

from .metrics import MetricsReport

# Fields that legitimately differ between otherwise identical runs.
VOLATILE_FIELDS = ("duration_s", "created_at")


def _clean(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    return value


def dumps(data) -> str:
    """Canonical JSON: sorted keys, NaN written as null."""
    return json.dumps(_clean(data), sort_keys=True, indent=2, allow_nan=False)


def content_hash(data: dict) -> str:
    stable = {k: v for k, v in data.items() if k not in VOLATILE_FIELDS}
    return hashlib.sha256(dumps(stable).encode()).hexdigest()


@dataclasses.dataclass
class ForecastReport:
    """Outcome of one forecasting run.

    ``model`` and ``params`` carry the trained readout and the reservoir draw
    for reuse; they are written separately, not as part of ``to_dict``.
    """

    coords: dict
    train: MetricsReport
    test: MetricsReport
    config: dict
    seed: int
    spec_hash: str
    n_train: int
    n_test: int
    duration_s: float = 0.0
    predictions: Optional[dict] = None
    model: Any = dataclasses.field(default=None, repr=False, compare=False)
    params: Any = dataclasses.field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        out = {
            "coords": self.coords,
            "train": self.train.to_dict(),
            "test": self.test.to_dict(),
            "config": self.config,
            "seed": self.seed,
            "spec_hash": self.spec_hash,
            "n_train": self.n_train,
            "n_test": self.n_test,
            "duration_s": self.duration_s,
        }
        if self.predictions is not None:
            out["predictions"] = self.predictions
        out["report_hash"] = content_hash(out)
        return out

    def to_json(self) -> str:
        return dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "ForecastReport":
        return cls(
            coords=data["coords"],
            train=MetricsReport.from_dict(data["train"]),
            test=MetricsReport.from_dict(data["test"]),
            config=data["config"],
            seed=data["seed"],
            spec_hash=data["spec_hash"],
            n_train=data["n_train"],
            n_test=data["n_test"],
            duration_s=data.get("duration_s", 0.0),
            predictions=data.get("predictions"),
        )
