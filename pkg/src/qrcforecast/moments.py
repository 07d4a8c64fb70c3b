"""Standardized-moment-ratio (SMR) tail analysis.

For each even order n the empirical standardized moment
``G_n = m_n / m_2**(n/2)`` (population central moments) is compared with the
Gaussian value ``(n-1)!!`` through ``R_n = (n-1)!! / G_n``.  A ratio that
falls with n indicates heavier-than-Gaussian tails.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from typing import Sequence

import numpy as np

from .errors import SpecError

DEFAULT_ORDERS = (4, 6, 8, 10, 12)
HIGH_ORDERS = (8, 10, 12)


class TailClass(str, enum.Enum):
    HEAVY = "heavy"
    LIGHT = "light"
    NON_MONOTONIC = "non_monotonic"


def _check_order(n) -> int:
    if int(n) != n or n % 2 or not 2 <= n <= 20:
        raise SpecError(f"moment order must be an even integer in [2, 20], got {n}")
    return int(n)


def gaussian_moment(n: int) -> float:
    """Double factorial ``(n-1)!!`` for even ``n``."""
    n = _check_order(n)
    return float(math.prod(range(n - 1, 0, -2)))


def standardized_moment(series, n: int) -> float:
    n = _check_order(n)
    y = np.asarray(series, dtype=float)
    if y.ndim != 1 or y.size < 2:
        raise SpecError("standardized moments need a 1-D series with at least 2 points")
    dev = y - y.mean()
    m2 = np.mean(dev**2)
    if m2 == 0:
        raise SpecError("zero variance: standardized moments undefined")
    # Scale first so high powers stay in range for raw volumes.
    z = dev / math.sqrt(m2)
    return float(np.mean(z**n))


@dataclasses.dataclass
class MomentProfile:
    orders: np.ndarray
    gamma_emp: np.ndarray
    gamma_gauss: np.ndarray
    smr: np.ndarray  # NaN marks an undefined ratio
    label: str = ""

    @property
    def defined(self) -> np.ndarray:
        return np.isfinite(self.smr)

    def restrict(self, orders: Sequence[int]) -> np.ndarray:
        lookup = {int(n): i for i, n in enumerate(self.orders)}
        missing = [n for n in orders if int(n) not in lookup]
        if missing:
            raise SpecError(f"profile {self.label!r} lacks orders {missing}")
        return self.smr[[lookup[int(n)] for n in orders]]


def smr_profile(series, orders: Sequence[int] = DEFAULT_ORDERS, label: str = "") -> MomentProfile:
    orders = np.array([_check_order(n) for n in orders])
    emp = np.array([standardized_moment(series, n) for n in orders])
    gauss = np.array([gaussian_moment(n) for n in orders])
    with np.errstate(divide="ignore", invalid="ignore"):
        smr = np.where(emp != 0, gauss / np.where(emp != 0, emp, 1.0), np.nan)
    return MomentProfile(orders, emp, gauss, smr, label)


def classify_tail(profile: MomentProfile, slack: float = 0.0) -> TailClass:
    """Heavy if SMR strictly falls with order, Light if it strictly rises.

    ``slack`` lets successive values differ by up to that amount in the
    wrong direction and still count as monotone.
    """
    values = profile.smr[profile.defined]
    if values.size < 3:
        raise SpecError(f"need at least 3 defined orders to classify, got {values.size}")
    steps = np.diff(values)
    if np.all(steps < slack):
        return TailClass.HEAVY
    if np.all(steps > -slack):
        return TailClass.LIGHT
    return TailClass.NON_MONOTONIC


def pearson(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or x.size < 2:
        raise SpecError("pearson needs two equal-length vectors with at least 2 points")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise SpecError("pearson correlation undefined for a constant vector")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


@dataclasses.dataclass
class CorrelationSummary:
    labels: list
    orders: list
    matrix: np.ndarray
    min_offdiag: float
    max_offdiag: float


def correlation_matrix(profiles: Sequence[MomentProfile], subset: Sequence[int] = DEFAULT_ORDERS) -> CorrelationSummary:
    """Pairwise Pearson correlation of SMR curves restricted to ``subset``."""
    if len(profiles) < 2:
        raise SpecError("correlation matrix needs at least two profiles")
    curves = [p.restrict(subset) for p in profiles]
    for p, c in zip(profiles, curves):
        if not np.all(np.isfinite(c)):
            raise SpecError(f"profile {p.label!r} has undefined SMR values in orders {list(subset)}")
    k = len(curves)
    mat = np.eye(k)
    for i in range(k):
        for j in range(i + 1, k):
            mat[i, j] = mat[j, i] = pearson(curves[i], curves[j])
    off = mat[~np.eye(k, dtype=bool)]
    return CorrelationSummary(
        [p.label for p in profiles], [int(n) for n in subset], mat, float(off.min()), float(off.max())
    )
