"""Error types shared across the package.

Every failure carries a stable machine-readable ``code`` (the strings the
CLI prints and the service returns in error bodies) plus a human detail.
"""

from __future__ import annotations


class LectureKitError(Exception):
    """Base class; ``code`` is the wire-level error identifier."""

    def __init__(self, code: str, detail: str = ""):
        super().__init__(f"{code}: {detail}" if detail else code)
        self.code = code
        self.detail = detail


class ValidationError(LectureKitError):
    """Input violates a documented contract (bad format, bad value, bad state)."""


class NotFoundError(LectureKitError):
    """A referenced entity does not exist."""


class ConflictError(LectureKitError):
    """Lost an optimistic-concurrency race or violated a uniqueness rule."""


class ForbiddenError(LectureKitError):
    """Caller's role does not permit the operation."""

    def __init__(self, detail: str = ""):
        super().__init__("forbidden-role", detail)


class StorageError(LectureKitError):
    """The persistence layer failed (full disk, unreadable artifact, I/O)."""
