# app/core/exceptions.py
"""
Domain exceptions. All of them derive from ValueError so callers that
only know about bad input can still catch them.
"""
from typing import Optional


class RaydiffError(ValueError):
    """Root of every error raised by the toolkit."""


class PathSetValidationError(RaydiffError):
    """A path tuple or path set violates the value rules."""


class DuplicateReceiverError(RaydiffError):
    """The same rx_id appears twice inside one dataset."""

    def __init__(self, rx_id: str):
        super().__init__(f"duplicate rx_id '{rx_id}' in dataset")
        self.rx_id = rx_id


class EmptyPathSetError(RaydiffError):
    """An operation needs at least one path and got none."""


class IngestError(RaydiffError):
    """A dataset file could not be parsed."""

    def __init__(self, message: str, path: Optional[str] = None,
                 row: Optional[int] = None, column: Optional[str] = None):
        where = []
        if path is not None:
            where.append(str(path))
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column '{column}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(f"{prefix}{message}")
        self.path = path
        self.row = row
        self.column = column


class PairingError(RaydiffError):
    """Two datasets cannot be paired receiver by receiver."""


class LayoutError(RaydiffError):
    """The receiver layout is missing, invalid or inconsistent."""


class SceneError(RaydiffError):
    """A scene file is malformed or refers to unknown materials."""


class ConfigError(RaydiffError):
    """Conflicting or invalid run configuration."""
