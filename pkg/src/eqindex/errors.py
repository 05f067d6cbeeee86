"""Exception types shared across the package."""


class EqIndexError(Exception):
    """Base class."""


class StructureError(EqIndexError, ValueError):
    """Malformed input: dimension or shape mismatch, bad JSON, invalid profile."""


class BudgetExceeded(EqIndexError):
    """Enumeration budget exceeded.  ``partial`` holds whatever was found."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial if partial is not None else []


class NotApplicable(EqIndexError):
    """A method's precondition fails (e.g. non-quasi-strict for the Jacobian route)."""


class IndexDisagreement(EqIndexError):
    """Perturbation trials could not agree on a degree."""


class VerificationFailed(EqIndexError):
    """A construction did not produce the verified property it promises."""
