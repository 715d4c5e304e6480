"""Exception hierarchy.

Domain errors are mathematically meaningful rejections (bad dimensions,
violated preconditions, exceeded enumeration caps).  Format errors cover
malformed JSON payloads.  The CLI maps the two families to different exit
codes.
"""


class AffprError(Exception):
    """Base class for all package errors."""


class DomainError(AffprError, ValueError):
    """Input rejected on mathematical grounds."""


class EnumerationCapError(DomainError):
    """Exhaustive enumeration would exceed the configured cap."""


class BudgetError(DomainError):
    """Estimated work exceeds the published budget."""

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class ConditioningError(DomainError):
    """A structural margin is too small for a reliable closed-form solve."""


class FormatError(AffprError):
    """Malformed serialized payload."""


class WitnessError(AffprError, RuntimeError):
    """A constructed witness failed its own verification (internal bug)."""
