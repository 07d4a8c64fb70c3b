"""JSON run configuration.

Every section rejects unknown keys.  Field reference:

``input``
    ``csv`` (path) *or* ``synthetic`` (``kind``, ``length``, ``seed``,
    ``period``, ``phase``, ``sigma``, ``mean``, ``label``); optional
    ``session`` (``pre``/``in``/``after``) filters timestamped rows.
``reservoir``
    Any :class:`~qrcforecast.reservoir.ReservoirSpec` field.
``readout``
    ``delta`` (6), ``lambda`` (1e-4), ``fraction`` (0.6), ``squared`` (false).
``metrics``
    ``sum_mse`` (false): use the summed instead of the mean squared error.
``sweep``
    Lists ``n_qubits`` (within [1, 6]), ``delta0`` and ``omega0`` (within
    [1, 10]).
``cross_day``
    ``train`` (input section), ``future`` (list of input sections),
    ``model`` (path to a saved readout, replaces ``train``),
    ``reuse_train_scale`` (false).
``smr``
    ``inputs`` (list of input sections), ``orders``, ``subset``, ``slack``.
``benchmark``
    ``models``, and ``esn`` / ``qiesn`` / ``mlp`` hyperparameter sections.
``output``
    ``predictions`` (true): include per-point predictions in reports.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from . import data as data_mod
from .baselines.compare import MODEL_NAMES
from .baselines.esn import QIESN_SPEC, EsnSpec
from .baselines.mlp import MlpSpec
from .errors import SpecError
from .moments import DEFAULT_ORDERS, HIGH_ORDERS
from .reservoir import MAX_QUBITS, ReservoirSpec


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class SyntheticConfig(_Section):
    kind: data_mod.SyntheticKind
    length: int = Field(gt=0)
    seed: Optional[int] = None
    period: float = 16.0
    phase: float = 0.0
    sigma: float = 0.05
    mean: float = 0.0
    label: Optional[str] = None


class InputConfig(_Section):
    csv: Optional[str] = None
    synthetic: Optional[SyntheticConfig] = None
    session: Optional[data_mod.Session] = None

    @model_validator(mode="after")
    def _one_source(self):
        if (self.csv is None) == (self.synthetic is None):
            raise ValueError("give exactly one of 'csv' or 'synthetic'")
        return self


class ReadoutConfig(_Section):
    delta: int = Field(6, ge=0)
    lam: float = Field(1e-4, alias="lambda", ge=0)
    fraction: float = Field(0.6, gt=0, lt=1)
    squared: bool = False


class MetricsConfig(_Section):
    sum_mse: bool = False


class SweepConfig(_Section):
    n_qubits: list[int] = Field(default_factory=lambda: list(range(1, MAX_QUBITS + 1)), min_length=1)
    delta0: list[float] = Field(default_factory=lambda: [float(v) for v in range(1, 11)], min_length=1)
    omega0: list[float] = Field(default_factory=lambda: [float(v) for v in range(1, 11)], min_length=1)

    @field_validator("n_qubits")
    @classmethod
    def _qubits(cls, v):
        bad = [n for n in v if not 1 <= n <= MAX_QUBITS]
        if bad:
            raise ValueError(f"qubit counts outside [1, {MAX_QUBITS}]: {bad}")
        return v

    @field_validator("delta0", "omega0")
    @classmethod
    def _centers(cls, v):
        bad = [x for x in v if not 1 <= x <= 10]
        if bad:
            raise ValueError(f"values outside [1, 10]: {bad}")
        return v

    @property
    def size(self) -> int:
        return len(self.n_qubits) * len(self.delta0) * len(self.omega0)


class CrossDayConfig(_Section):
    train: Optional[InputConfig] = None
    future: list[InputConfig] = Field(default_factory=list)
    model: Optional[str] = None
    reuse_train_scale: bool = False


class SmrConfig(_Section):
    inputs: list[InputConfig] = Field(default_factory=list)
    orders: list[int] = Field(default_factory=lambda: list(DEFAULT_ORDERS))
    subset: list[int] = Field(default_factory=lambda: list(HIGH_ORDERS))
    slack: float = Field(0.0, ge=0)


class BenchmarkConfig(_Section):
    models: list[Literal["mlp", "esn", "qiesn", "qrc"]] = Field(default_factory=lambda: list(MODEL_NAMES))
    esn: EsnSpec = EsnSpec()
    qiesn: EsnSpec = QIESN_SPEC
    mlp: MlpSpec = MlpSpec()


class OutputConfig(_Section):
    predictions: bool = True


class RunConfig(_Section):
    input: Optional[InputConfig] = None
    reservoir: ReservoirSpec = ReservoirSpec()
    readout: ReadoutConfig = ReadoutConfig()
    metrics: MetricsConfig = MetricsConfig()
    sweep: SweepConfig = SweepConfig()
    cross_day: CrossDayConfig = CrossDayConfig()
    smr: SmrConfig = SmrConfig()
    benchmark: BenchmarkConfig = BenchmarkConfig()
    output: OutputConfig = OutputConfig()

    def snapshot(self) -> dict:
        """JSON-ready dict that re-validates to an equivalent config."""
        return self.model_dump(mode="json", by_alias=True)

    @property
    def reduction(self) -> str:
        return "sum" if self.metrics.sum_mse else "mean"


def _format_errors(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        path = ".".join(str(p) for p in err["loc"]) or "<root>"
        lines.append(f"{path}: {err['msg']}")
    return "; ".join(lines)


def _resolve_paths(cfg: RunConfig, base: Path) -> None:
    def fix(section: Optional[InputConfig]):
        if section is not None and section.csv is not None:
            p = Path(section.csv)
            if not p.is_absolute():
                section.csv = str((base / p).resolve())

    fix(cfg.input)
    fix(cfg.cross_day.train)
    for s in cfg.cross_day.future:
        fix(s)
    for s in cfg.smr.inputs:
        fix(s)
    if cfg.cross_day.model is not None and not Path(cfg.cross_day.model).is_absolute():
        cfg.cross_day.model = str((base / cfg.cross_day.model).resolve())


def parse_config(data: dict, base_dir=None) -> RunConfig:
    """Validate a config dict; relative paths resolve against ``base_dir``."""
    try:
        cfg = RunConfig.model_validate(data)
    except ValidationError as exc:
        raise SpecError(f"invalid config: {_format_errors(exc)}") from None
    _resolve_paths(cfg, Path(base_dir) if base_dir is not None else Path.cwd())
    return cfg


def load_config(path=None) -> RunConfig:
    if path is None:
        return parse_config({})
    path = Path(path)
    if not path.exists():
        raise SpecError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}: malformed JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise SpecError(f"{path}: top level must be a JSON object")
    return parse_config(raw, path.parent)


def load_input(section: InputConfig) -> data_mod.TimeSeries:
    """Materialize an input section as a series (session-filtered if asked)."""
    if section.csv is not None:
        ts = data_mod.load_csv(section.csv)
    else:
        s = section.synthetic
        ts = data_mod.gen_synthetic(
            s.kind, s.length, s.seed, s.period, s.phase, s.sigma, s.mean, s.label
        )
    if section.session is not None:
        parts = data_mod.split_sessions(ts)
        if section.session not in parts:
            raise data_mod.DataError(f"series {ts.label!r} has no {section.session.value}-market samples")
        ts = parts[section.session]
    return ts
