class DomainError(ValueError):
    """Input outside the domain where an operation is defined."""


class UnsupportedMetricError(ValueError):
    """No closed-form construction exists for the requested metric."""


class PreconditionError(ValueError):
    """A documented precondition failed; the message carries the residual."""
