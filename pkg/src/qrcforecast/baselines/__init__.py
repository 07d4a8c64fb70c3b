"""Classical comparison models: ESN, quantum-inspired ESN and an MLP."""

from .esn import QIESN_SPEC, EsnSpec, EsnState, esn_features, esn_init, esn_step, spectral_radius
from .mlp import Adam, MlpModel, MlpSpec, mlp_init, mlp_loss_and_grad, mlp_predict, mlp_train, window_dataset
from .compare import MODEL_NAMES, ComparisonReport, benchmark_compare, compare_reports

__all__ = [
    "Adam",
    "MODEL_NAMES",
    "ComparisonReport",
    "EsnSpec",
    "EsnState",
    "MlpModel",
    "MlpSpec",
    "QIESN_SPEC",
    "benchmark_compare",
    "compare_reports",
    "esn_features",
    "esn_init",
    "esn_step",
    "mlp_init",
    "mlp_loss_and_grad",
    "mlp_predict",
    "mlp_train",
    "spectral_radius",
    "window_dataset",
]
