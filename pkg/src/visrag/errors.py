"""Error classes shared across the engine.

Every error the public API can raise derives from VisragError and carries a
stable ``exit_code`` so the CLI can map failures to process exit statuses
(documented in the README).
"""


class VisragError(Exception):
    exit_code = 1


class FormatError(VisragError):
    """Malformed embedding file, metadata line, or taxonomy file."""

    exit_code = 3


class CountMismatch(VisragError):
    """Embedding row count and metadata line count disagree."""

    exit_code = 4


class TaxonomyViolation(VisragError):
    """Label not present in, or inconsistent with, the taxonomy."""

    exit_code = 5


class NonFiniteValue(VisragError):
    """NaN or Inf encountered where finite floats are required."""

    exit_code = 6


class DimensionMismatch(VisragError):
    """Vectors of different dimensionality were mixed."""

    exit_code = 7


class DuplicateId(VisragError):
    """Entry id repeated within one store."""

    exit_code = 8


class EmptyStore(VisragError):
    """Store built from, or queried with, nothing."""

    exit_code = 9


class ZeroVector(VisragError):
    """Vector with (near-)zero norm where a direction is required."""

    exit_code = 10


class MissingContext(VisragError):
    """Rag-mode prompt requested with no retrieved context."""

    exit_code = 11


class LengthMismatch(VisragError):
    """Prediction and truth lists have different lengths."""

    exit_code = 12


class EmptyQuerySet(VisragError):
    """Metric requested over zero queries."""

    exit_code = 13


class InsufficientData(VisragError):
    """Not enough samples for the requested decomposition."""

    exit_code = 14


class LlmTimeout(VisragError):
    """Backend did not answer within the configured timeout."""

    exit_code = 15


class TransportError(VisragError):
    """Connection-level failure talking to the backend."""

    exit_code = 16


class ProtocolError(VisragError):
    """Backend answered with a non-conforming payload."""

    exit_code = 17


class IoError(VisragError):
    """Filesystem read/write failure."""

    exit_code = 18
