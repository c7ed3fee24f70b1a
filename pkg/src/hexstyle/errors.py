"""Exception hierarchy shared across the toolkit.

The CLI maps these onto its exit-code contract: UsageError -> 1,
DataError (and subclasses) -> 2, NumericsError -> 3.
"""


class ToolkitError(Exception):
    """Base class for all toolkit errors."""


class UsageError(ToolkitError):
    """Bad command-line arguments or mutually inconsistent options."""


class DataError(ToolkitError):
    """Input data is missing, malformed, or insufficient for the request."""


class CorpusParseError(DataError):
    """Fatal XML parse failure. Carries the 1-based position of the error."""

    def __init__(self, message, line=None, column=None, byte_offset=None):
        super().__init__(message)
        self.line = line
        self.column = column
        self.byte_offset = byte_offset


class FetchError(DataError):
    """Network fetch failure.

    ``kind`` is one of "dns", "connect", "http"; ``status`` carries the
    HTTP status code for kind "http".
    """

    def __init__(self, message, kind, status=None):
        super().__init__(message)
        self.kind = kind
        self.status = status


class NumericsError(ToolkitError):
    """Numerical computation could not be completed."""


class SingularMatrixError(NumericsError):
    """Covariance matrix not invertible even at the maximum ridge."""
