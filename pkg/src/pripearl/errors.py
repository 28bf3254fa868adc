"""Shared exception types."""


class PripearlError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(PripearlError):
    """Input violates a documented precondition or field constraint."""


class UnknownEntityError(PripearlError):
    """Entity id is not registered in the entity hierarchy."""


class SnapshotError(PripearlError):
    """Snapshot file is unreadable, truncated, or internally inconsistent."""
