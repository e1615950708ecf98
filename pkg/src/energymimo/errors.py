"""Exception hierarchy shared across the package."""


class EnergyMimoError(Exception):
    """Base class for all package-specific errors."""


class DimensionError(EnergyMimoError, ValueError):
    """Array shapes are inconsistent (e.g. subcarrier matrices disagree)."""


class DomainError(EnergyMimoError, ValueError):
    """A numeric argument is outside its physical domain."""


class SingularChannelError(EnergyMimoError):
    """The user-side Gram matrix is rank deficient or too ill-conditioned."""


class InfeasibleError(EnergyMimoError):
    """The QoS targets cannot be met under the given power constraints.

    Attributes carry whatever diagnostic is available: ``deficit`` for a
    power shortfall, ``min_feasible_m`` for the smallest antenna count that
    would make the scenario feasible.
    """

    def __init__(self, message, *, deficit=None, min_feasible_m=None):
        super().__init__(message)
        self.deficit = deficit
        self.min_feasible_m = min_feasible_m


class OracleSizeError(EnergyMimoError, ValueError):
    """The instance exceeds the desk-scale guard of a brute-force oracle."""


class ConfigError(EnergyMimoError, ValueError):
    """A config file could not be parsed; carries the offending line number."""

    def __init__(self, message, *, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
