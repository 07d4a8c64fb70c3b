"""Time-series forecasting with a simulated open-system qubit reservoir."""

from .data import TimeSeries, gen_synthetic, load_csv, normalize_max, split_train_test
from .errors import DataError, IntegrationError, PipelineError, QRCError, SpecError
from .features import FeatureMatrix
from .metrics import MetricsReport, direction_accuracy, evaluate, mape, mse, nmse, rmse
from .moments import classify_tail, correlation_matrix, smr_profile, standardized_moment
from .readout import ReadoutModel, forecast_pipeline, predict, ridge_fit, train_readout
from .reservoir import (
    QubitParams,
    ReservoirSpec,
    build_hamiltonian,
    compute_features,
    evolve,
    measure_readout,
    sample_qubit_params,
)

__version__ = "0.1.0"
