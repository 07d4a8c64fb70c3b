"""Container for reservoir feature matrices (rows = features, columns = time)."""

from __future__ import annotations

import dataclasses
from typing import Optional

import numpy as np


@dataclasses.dataclass
class FeatureMatrix:
    """Readout features laid out as ``F x K`` (features by time samples).

    Attributes:
        values: The ``F x K`` real matrix.
        delay: Delay-embedding depth already applied (0 for raw readouts).
        bias: Whether the last row is the constant bias row.
        spec_hash: Identifier of the reservoir draw that produced the features.
        washout: Number of leading columns that must not be used for training.
    """

    values: np.ndarray
    delay: int = 0
    bias: bool = False
    spec_hash: Optional[str] = None
    washout: int = 0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ValueError(f"feature matrix must be 2-D, got shape {self.values.shape}")

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self):
        return self.values.shape

    def columns(self, sl) -> "FeatureMatrix":
        """Return a copy restricted to the column slice ``sl``."""
        return dataclasses.replace(self, values=self.values[:, sl].copy(), washout=0)
