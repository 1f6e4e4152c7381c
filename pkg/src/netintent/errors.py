"""Domain exception hierarchy shared across the stack.

Every failure a tool can produce maps onto one of the gateway's structured
error kinds; transport-level problems are kept separate (see gateway).
"""

from __future__ import annotations


class DomainError(Exception):
    """Base for all recoverable domain failures (gateway: precondition_failed)."""


class ValidationError(DomainError):
    """Malformed value or violated invariant (bad SUPI, AMBR over capacity, ...)."""


class NotFoundError(DomainError):
    """Referenced entity does not exist."""


class DuplicateError(DomainError):
    """Uniqueness constraint violated (slice name, SUPI, subscription id)."""


class LifecycleError(DomainError):
    """Illegal state transition (e.g. modifying a released session)."""


class InsufficientDataError(DomainError):
    """Not enough matching records for the requested analysis."""


class ApprovalRequired(DomainError):
    """Mutating call lacked a valid approved token (gateway: approval_required)."""


class SchemaViolation(DomainError):
    """Tool arguments failed schema validation; message names the field."""


class BackendError(Exception):
    """LLM backend unreachable or misbehaving; not a domain failure."""
