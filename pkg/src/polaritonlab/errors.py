"""Exception hierarchy shared by all polaritonlab modules."""


class PolaritonLabError(Exception):
    """Base class for every error raised by the package."""


class DomainError(PolaritonLabError, ValueError):
    """An input lies outside the domain where an operation is defined."""


class NumericalError(PolaritonLabError, RuntimeError):
    """A numerical routine failed to converge or produced an invalid result."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class ModeCutoffError(PolaritonLabError):
    """No guided mode exists for the requested structure / mode order."""


class TruncationError(NumericalError):
    """Fock-space truncation is no longer valid; a larger cutoff is needed."""


class NoBlockadeSignal(DomainError):
    """g2 minimum is not below one, so no interaction can be extracted."""


class StatisticsError(PolaritonLabError):
    """Not enough data to form the requested statistic."""


class ConfigError(PolaritonLabError, ValueError):
    """Configuration document is missing a key or has an invalid value."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key
