"""Exception hierarchy shared across the toolkit.

The CLI maps these onto process exit codes: usage problems exit 2,
missing prerequisite artifacts exit 3, bad data exits 4.
"""


class RelsubError(Exception):
    """Base class for all toolkit errors."""


class UsageError(RelsubError):
    """Invalid configuration or parameters supplied by the caller."""


class ConfigError(UsageError):
    """A training or run configuration failed validation."""


class DependencyError(RelsubError):
    """A stage prerequisite artifact is missing."""

    def __init__(self, missing_path, message=None):
        self.missing_path = str(missing_path)
        super().__init__(message or f"missing prerequisite artifact: {self.missing_path}")


class DataError(RelsubError):
    """Input data violates the expected format or internal consistency."""


class ParseError(DataError):
    """A malformed line was encountered while parsing triple data."""

    def __init__(self, line_number, message):
        self.line_number = line_number
        super().__init__(f"line {line_number}: {message}")


class FormatError(DataError):
    """A serialized artifact has a bad header, version, or truncated body."""


class EmbeddingLookupError(DataError):
    """An entity or relation has no embedding vector."""

    def __init__(self, uri):
        self.uri = uri
        super().__init__(f"no embedding for {uri!r}")


class DegenerateVectorError(DataError):
    """A zero-norm vector cannot be projected onto the unit sphere."""
