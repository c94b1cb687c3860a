"""Exception hierarchy shared across the pipeline.

ConfigError maps to CLI exit code 2, everything else data-related to 3.
"""


class PipelineError(Exception):
    """Base class for all neurodrive errors."""


class ConfigError(PipelineError):
    """Invalid configuration: unknown option, incompatible flag combination."""


class DataError(PipelineError):
    """Malformed or missing input data."""


class InvalidBandError(DataError):
    """Frequency band outside (0, Nyquist) or empty."""


class EmptyBandError(DataError):
    """No spectral bins fall inside the requested band."""


class TooShortError(DataError):
    """Signal has too few samples for the requested operation."""


class InsufficientPeaksError(DataError):
    """Fewer peaks detected than the operation requires."""


class SingleClassError(DataError):
    """Training labels contain only one class."""


class UndefinedMetricError(DataError):
    """Metric is undefined for the given inputs (e.g. single-class AUC)."""


class DimensionMismatchError(DataError):
    """Array shape does not match what a model or backend expects."""
