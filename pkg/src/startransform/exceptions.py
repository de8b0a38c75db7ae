"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class CapacityError(RuntimeError):
    """A bounded enumeration or search was asked to exceed its limit."""


class NotFittedError(ValueError, AttributeError):
    """Raised when an estimator is used before ``fit``."""
