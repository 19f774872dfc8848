"""Exception and warning types shared by all modules."""


class XWQError(Exception):
    """Base class for library errors."""


class DomainError(XWQError, ValueError):
    """An argument lies outside the domain of the operation."""


class AccuracyError(XWQError):
    """A numerical accuracy check failed.

    ``diagnostics`` carries the quantities that triggered the failure.
    """

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class AliasingError(AccuracyError):
    """Spectral content reaches the edge of the resolvable band."""


class InstabilityError(AccuracyError):
    """A time integration blew up."""


class IntegratorAccuracyError(AccuracyError):
    """Structure preservation (symplectic identity) drifted beyond tolerance."""


class AccuracyWarning(UserWarning):
    """Result is usable but a truncation or validity check was marginal."""
