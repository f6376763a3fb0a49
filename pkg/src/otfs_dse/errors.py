"""Exception types raised across the package."""


class ConfigError(ValueError):
    """A frame configuration is not admissible."""


class CPTooShort(ConfigError):
    pass


class CPTooLong(ConfigError):
    pass


class DSEAssumptionViolated(ConfigError):
    """(N+2)M is not below the smallest mobility parameter |p_i| = c/v."""


class DopplerAmbiguous(ConfigError):
    """The pilot phase difference for k_max would wrap past pi."""


class KmaxTooSmall(ConfigError):
    """k_max is below ceil(nu_max N T) for the requested velocity."""


class ZeroReference(ValueError):
    """A reference quantity used as a divisor is exactly zero."""


class SingularSystem(ValueError):
    """The equalizer normal matrix could not be factorized."""
