"""Exception hierarchy for evidence-plane.

Every error raised by the package derives from :class:`EvidencePlaneError`
and from the closest builtin exception, so callers that only know about
``ValueError`` or ``RuntimeError`` keep working.
"""

from __future__ import annotations

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


class EvidencePlaneError(Exception):
    """Base class for all package errors."""


class ArchitectureError(EvidencePlaneError, ValueError):
    """Invalid layer dimension list."""


class ShapeError(EvidencePlaneError, ValueError):
    """Array dimensions do not match what an operation expects."""


class LabelError(EvidencePlaneError, ValueError):
    """Class label outside ``[0, K)``."""


class TraceError(EvidencePlaneError, ValueError):
    """Forward trace does not belong to the network it is used with."""


class NumericalError(EvidencePlaneError, ArithmeticError):
    """Non-finite gradient or parameter encountered during optimization."""


class EncodingError(EvidencePlaneError, ValueError):
    """Feature outside ``[0, 1]`` passed to the rate encoder."""


class DomainError(EvidencePlaneError, ValueError):
    """Argument outside the mathematical domain of a function."""


class ResourceError(EvidencePlaneError, RuntimeError):
    """Requested exhaustive enumeration is too large."""


class GenerationError(EvidencePlaneError, RuntimeError):
    """Synthetic data generation exceeded its sampling budget."""


class IngestionError(EvidencePlaneError, ValueError):
    """Dataset file could not be ingested."""


class IdxMagicError(IngestionError):
    """IDX file carries an unexpected magic number."""


class TruncatedFileError(IngestionError):
    """IDX payload shorter than its header announces."""


class CountMismatchError(IngestionError):
    """Image and label files disagree on the number of items."""


class SampleSizeError(EvidencePlaneError, ValueError):
    """Too few samples for the requested nearest-neighbour order."""


class ConfigurationError(EvidencePlaneError, ValueError):
    """Invalid experiment or estimator configuration."""


class EvaluationError(EvidencePlaneError, ValueError):
    """Empty or incomplete evaluation input."""


def exit_code_for(exc: BaseException) -> int:
    """Map an exception to the CLI exit code contract."""
    if isinstance(exc, ConfigurationError):
        return EXIT_CONFIG
    if isinstance(exc, (IngestionError, OSError)):
        return EXIT_DATA
    if isinstance(exc, NumericalError):
        return EXIT_NUMERIC
    return EXIT_FAILURE
