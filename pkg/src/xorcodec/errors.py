"""Exception types shared across the codec."""

from __future__ import annotations


class CodecError(Exception):
    """Base class for all codec errors."""


class RejectedInputError(CodecError, ValueError):
    """An argument has the wrong shape or length for the operation."""


class ConfigError(CodecError, ValueError):
    """A configuration parameter is out of its allowed range."""


class CorruptStreamError(CodecError):
    """A serialized stream is malformed, truncated or inconsistent."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset
