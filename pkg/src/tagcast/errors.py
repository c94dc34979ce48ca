"""Exception hierarchy shared across the package.

Data problems (bad corpus files, reserved-token collisions) and config
problems (inadmissible format combinations) are kept distinct so the CLI
can map them to different exit codes.
"""

from __future__ import annotations


class TagcastError(Exception):
    """Base class for all package errors."""


class ConfigError(TagcastError):
    """Invalid configuration (CLI exit code 2)."""


class InadmissibleFormat(ConfigError):
    """A (family, SI, SO, simplified) combination outside the supported set."""


class DataError(TagcastError):
    """Invalid input data (CLI exit code 3)."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class MalformedLine(DataError):
    pass


class LabelSyntax(DataError):
    pass


class ReservedTokenCollision(DataError):
    """A token collides with markup or sentinel syntax and cannot be encoded."""


class OverlappingSpans(DataError):
    pass


class SpanOutOfRange(DataError):
    pass


class SentinelOverflow(DataError):
    """More tokens than available sentinel indices."""


class EmptyDataset(DataError):
    pass


class DuplicateId(DataError):
    pass


class EmptyCandidates(DataError):
    pass
