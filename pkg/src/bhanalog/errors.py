"""Exception and warning types shared across the package."""


class BHError(Exception):
    """Base class for all simulator errors."""


class DimensionError(BHError, ValueError):
    """A field does not match the grid it is used with."""


class NumericError(BHError, ArithmeticError):
    """Non-finite values appeared in a field."""

    def __init__(self, message, site=None):
        super().__init__(message)
        self.site = site


class VacuumSiteError(BHError, ValueError):
    """A site has (near) zero amplitude where the density-phase picture is required."""


class PhaseWindingError(BHError, ValueError):
    """The phase winds too fast between neighbouring sites to be unwrapped."""


class HistoryError(BHError, ValueError):
    """Not enough time levels are available for a time-derivative diagnostic."""


class ConfigError(BHError, ValueError):
    """Invalid parameters or scenario configuration."""


class UnsupportedConfigurationError(ConfigError):
    """The requested construction is not defined for this configuration."""


class ExtractionError(BHError, RuntimeError):
    """A dispersion measurement failed to find a clear spectral peak."""


class EvolutionAborted(NumericError):
    """Time evolution hit non-finite values; carries the last good snapshot."""

    def __init__(self, message, site=None, last_good=None):
        super().__init__(message, site=site)
        self.last_good = last_good


class ValidityWarning(UserWarning):
    """A regime or approximation validity threshold is violated."""


class StabilityWarning(UserWarning):
    """The time step exceeds the explicit-integrator stability estimate."""
