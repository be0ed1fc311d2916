"""Exception hierarchy shared across the pipeline.

Two branches matter for exit-code / HTTP mapping: ``MissingInputError``
(absent files, exit code 2, HTTP 404) and everything else derived from
``NncompError`` (validation failures, exit code 1, HTTP 400).
"""


class NncompError(Exception):
    """Base class for all pipeline errors."""


class MissingInputError(NncompError):
    """A required input file or directory does not exist."""


class ConfigError(NncompError):
    """Invalid run configuration value."""


class GoldFormatError(NncompError):
    """Structurally malformed gold-standard file (bad columns, unparsable rating)."""


class GoldValidationError(NncompError):
    """Well-formed gold file violating a dataset invariant."""


class SplitError(NncompError):
    """Compound occurrence cannot be split as required."""


class StoreFormatError(NncompError):
    """Embedding file has an unsupported magic or version."""


class StoreCorruptionError(NncompError):
    """Embedding file is truncated or fails its checksum."""


class StoreValidationError(NncompError):
    """Tensor content violates a store invariant (shape, roles, finiteness)."""


class EstimateError(NncompError):
    """Degenerate input to an estimate (zero vector, empty aggregation)."""


class CorrelationError(NncompError):
    """Undefined rank correlation (constant input, length mismatch, too few points)."""
