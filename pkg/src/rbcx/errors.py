"""Exception hierarchy shared by every rbcx module."""


class RbcxError(Exception):
    """Base class for all errors raised by rbcx."""


class ValidationError(RbcxError, ValueError):
    """An argument violates a documented precondition."""


class ImageFormatError(RbcxError):
    """A raster file is not a supported grayscale PNG/PGM."""


class IrmaParseError(ValidationError):
    """An IRMA code or label file could not be parsed.

    ``position`` is the 0-based character offset of the offending input,
    or ``None`` when the problem is the overall shape.
    """

    def __init__(self, message: str, position: int | None = None):
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)
        self.position = position


class IndexFormatError(RbcxError):
    """An index file has a bad magic, version or layout."""


class IndexBoundsError(IndexFormatError):
    """An index file is truncated or has an offset outside the file."""
