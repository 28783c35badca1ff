"""Exception hierarchy shared across the engine.

Every exception carries a short machine-readable ``code`` that the HTTP
layer maps onto a status code; library callers catch the classes directly.
"""

from __future__ import annotations


class EngineError(Exception):
    """Base class for all engine errors."""

    code = "Internal"

    def __init__(self, message: str, detail: dict | None = None):
        super().__init__(message)
        self.message = message
        self.detail = detail or {}


class NotFoundError(EngineError):
    code = "NotFound"


class ConflictError(EngineError):
    code = "Conflict"


class InvalidError(EngineError):
    code = "Invalid"


class SchemaError(InvalidError):
    """Payload does not match the schema required by a block type."""


class FormatError(InvalidError):
    """Source bytes cannot be read in the declared format."""


class EmptyDocumentError(InvalidError):
    """Source yielded zero pages."""


class ScriptError(InvalidError):
    """A scripted evaluation session references something that does not exist."""

    def __init__(self, message: str, *, path: str | None = None,
                 action_index: int | None = None, line: int | None = None):
        detail: dict = {}
        if path is not None:
            detail["path"] = path
        if action_index is not None:
            detail["action_index"] = action_index
        if line is not None:
            detail["line"] = line
        super().__init__(message, detail)
        self.path = path
        self.action_index = action_index
        self.line = line


class AdapterUnavailableError(EngineError):
    code = "AdapterUnavailable"
