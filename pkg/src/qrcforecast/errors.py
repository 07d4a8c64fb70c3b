"""Exception hierarchy shared across the package."""


class QRCError(Exception):
    """Base class for every error raised by qrcforecast."""


class SpecError(QRCError, ValueError):
    """Invalid configuration or argument values."""


class IntegrationError(QRCError, RuntimeError):
    """The master-equation integrator produced an unphysical state."""

    def __init__(self, message, column=None):
        if column is not None:
            message = f"column {column}: {message}"
        super().__init__(message)
        self.column = column


class DataError(QRCError, ValueError):
    """Malformed or unusable input series."""


class ReadoutError(QRCError, ValueError):
    """Shape mismatches or singular systems in the linear readout."""


class PipelineError(QRCError, RuntimeError):
    """A forecasting stage failed; ``stage`` names which one."""

    def __init__(self, stage, message):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


class SpecHashWarning(UserWarning):
    """A readout was applied to features from a different reservoir draw."""


class TrainingError(QRCError, RuntimeError):
    """Iterative training diverged."""
