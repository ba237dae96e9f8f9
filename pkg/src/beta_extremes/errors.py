"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where an operation is defined."""


class AmbiguousRegimeError(ValueError):
    """Regime diagnostics fall inside an ambiguity band; pick the regime explicitly."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics


class RegimeMismatchError(ValueError):
    """The requested regime does not match the classified regime of (n, beta)."""


class ConfigError(ValueError):
    """An experiment configuration violates a hypothesis or is malformed."""


class SampleSizeError(ValueError):
    """Too few samples or replicas for the requested statistic."""


class NumericalFault(ArithmeticError):
    """A computation produced a non-finite or otherwise unusable result."""
