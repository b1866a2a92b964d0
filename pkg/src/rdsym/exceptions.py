"""Exception hierarchy shared by all modules."""


class RdsymError(Exception):
    """Base class for every error raised by this package."""


class ContractViolation(RdsymError, ValueError):
    """An argument breaks a documented precondition."""


class DomainTooSmallError(RdsymError):
    """The truncated domain no longer approximates the whole plane."""

    def __init__(self, message, max_value=None, location=None, time=None):
        super().__init__(message)
        self.max_value = max_value
        self.location = location
        self.time = time


class NumericalBlowupError(RdsymError):
    """A time step produced non-finite values."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class EmptyLevelSetError(RdsymError):
    pass


class LevelNotInvadedError(RdsymError):
    """u(t, origin) <= theta, so the origin-centred radius is undefined."""


class ProfileUndefinedError(RdsymError):
    """The level set is not star-shaped, so no polar profile exists."""


class ConfigError(RdsymError, ValueError):
    """Raised by the configuration parser; ``errors`` lists every problem found."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
