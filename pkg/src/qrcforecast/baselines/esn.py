"""Leaky-integrator echo state networks.

Update rule: ``x <- (1 - a) x + a tanh(W_in f(u) + W x)`` with ``f`` the
identity (ESN) or ``sin`` (quantum-inspired ESN).
"""

from __future__ import annotations

import dataclasses
import enum
from typing import Optional

import numpy as np

from ..errors import DataError, SpecError
from ..features import FeatureMatrix


class FeatureMap(str, enum.Enum):
    IDENTITY = "identity"
    SIN = "sin"


class MapTarget(str, enum.Enum):
    INPUT = "input"
    STATE = "state"


@dataclasses.dataclass(frozen=True)
class EsnSpec:
    """ESN hyperparameters.

    ``sparsity`` is the fraction of recurrent weights forced to zero.
    ``map_target`` selects whether the feature map acts on the scalar input
    (default) or on the recurrent state.
    """

    __pydantic_config__ = {"extra": "forbid"}

    n_reservoir: int = 400
    spectral_radius: float = 0.95
    leak_rate: float = 0.8
    sparsity: float = 0.0
    input_scale: float = 1.0
    feature_map: FeatureMap = FeatureMap.IDENTITY
    map_target: MapTarget = MapTarget.INPUT
    seed: int = 0
    washout: int = 20

    def __post_init__(self):
        object.__setattr__(self, "feature_map", FeatureMap(self.feature_map))
        object.__setattr__(self, "map_target", MapTarget(self.map_target))
        if self.n_reservoir < 1:
            raise SpecError("n_reservoir must be positive")
        if not 0 <= self.leak_rate <= 1:
            raise SpecError(f"leak_rate must lie in [0, 1], got {self.leak_rate}")
        if not self.spectral_radius > 0:
            raise SpecError(f"spectral_radius must be positive, got {self.spectral_radius}")
        if not 0 <= self.sparsity <= 1:
            raise SpecError(f"sparsity must lie in [0, 1], got {self.sparsity}")
        if self.washout < 0:
            raise SpecError("washout must be non-negative")

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["feature_map"] = self.feature_map.value
        out["map_target"] = self.map_target.value
        return out


QIESN_SPEC = EsnSpec(sparsity=0.1, feature_map=FeatureMap.SIN, seed=42)


@dataclasses.dataclass
class EsnState:
    W: np.ndarray
    W_in: np.ndarray
    x: np.ndarray
    spec: EsnSpec


def spectral_radius(W: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(W))))


def esn_init(spec: EsnSpec, input_dim: int = 1) -> EsnState:
    """Seeded reservoir with its spectral radius rescaled to the target."""
    rng = np.random.default_rng(spec.seed)
    n = spec.n_reservoir
    for _ in range(2):
        W = rng.uniform(-1.0, 1.0, (n, n))
        W[rng.random((n, n)) < spec.sparsity] = 0.0
        radius = spectral_radius(W)
        if radius > 0:
            break
    else:
        raise SpecError("recurrent matrix has zero spectral radius (all-zero draw)")
    W *= spec.spectral_radius / radius
    W_in = rng.uniform(-spec.input_scale, spec.input_scale, (n, input_dim))
    return EsnState(W, W_in, np.zeros(n), spec)


def _drive(spec: EsnSpec, u) -> np.ndarray:
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if spec.feature_map is FeatureMap.SIN and spec.map_target is MapTarget.INPUT:
        return np.sin(u)
    return u


def _recurrent(spec: EsnSpec, x: np.ndarray) -> np.ndarray:
    if spec.feature_map is FeatureMap.SIN and spec.map_target is MapTarget.STATE:
        return np.sin(x)
    return x


def esn_step(state: EsnState, u) -> EsnState:
    spec = state.spec
    a = spec.leak_rate
    pre = state.W_in @ _drive(spec, u) + state.W @ _recurrent(spec, state.x)
    x = (1.0 - a) * state.x + a * np.tanh(pre)
    return dataclasses.replace(state, x=x)


def esn_features(series, spec: EsnSpec, state: Optional[EsnState] = None) -> FeatureMatrix:
    """Reservoir states after each input, ``n_reservoir x K``.

    The first ``spec.washout`` columns are flagged (``FeatureMatrix.washout``)
    and must be excluded from training.
    """
    u = np.asarray(series, dtype=float)
    if u.ndim != 1:
        raise DataError("ESN input must be one-dimensional")
    if u.size < spec.washout + 2:
        raise DataError(f"series of {u.size} points shorter than washout + 2 = {spec.washout + 2}")
    if state is None:
        state = esn_init(spec, 1)
    out = np.empty((spec.n_reservoir, u.size))
    for k, value in enumerate(u):
        state = esn_step(state, value)
        out[:, k] = state.x
    return FeatureMatrix(out, washout=spec.washout)
