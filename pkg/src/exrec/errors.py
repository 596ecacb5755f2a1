"""Exception types shared across the package."""


class ExrecError(Exception):
    """Base class for all package errors."""


class DumpParseError(ExrecError):
    """Malformed dump XML or a row violating the dump schema."""

    def __init__(self, message: str, byte_offset: int | None = None):
        if byte_offset is not None:
            message = f"{message} (at byte offset {byte_offset})"
        super().__init__(message)
        self.byte_offset = byte_offset


class IntegrityError(ExrecError):
    """Duplicate identifiers or artifacts built from different inputs."""


class EmptyQueryError(ExrecError, ValueError):
    """A query that cleans to zero tokens."""


class NotFoundError(ExrecError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""
