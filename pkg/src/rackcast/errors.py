"""Exception hierarchy.

The CLI maps the three top-level families onto exit codes:
``ConfigError`` -> 1, ``DataError`` -> 2, ``InvariantError`` -> 3.
"""


class RackError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(RackError, ValueError):
    """Invalid configuration or hyperparameter."""


class DataError(RackError, ValueError):
    """Input data that cannot be used as given."""


class SchemaError(DataError):
    """CSV header does not carry a required column."""


class EmptyInputError(DataError):
    """Input file has no content at all (not even a header)."""


class ShapeError(DataError):
    """Mismatched lengths or feature columns."""


class TrainingDataError(DataError):
    """Not enough usable training rows for a model."""


class ZeroActualError(DataError, ZeroDivisionError):
    """Percentage error requested for a zero actual."""


class UndefinedAccuracyError(DataError):
    """Accuracy requested when every actual is zero."""


class SingularMatrixError(DataError):
    """Least-squares system is singular for the chosen penalty."""


class DimensionalityError(ConfigError):
    """Too many features for a polynomial expansion."""


class IncompleteRackError(ConfigError):
    """Fewer than the five rack models were supplied."""


class ModelFormatError(DataError):
    """Persisted model file is malformed or has the wrong version."""


class InvariantError(RackError, AssertionError):
    """Internal consistency check failed."""
