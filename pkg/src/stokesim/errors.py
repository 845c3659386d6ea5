"""Exception types shared across the package."""


class StokesimError(ValueError):
    """Base class for all stokesim errors."""


class RegistryError(StokesimError):
    """Unknown, duplicate, or mismatched mode declarations."""


class ValidationError(StokesimError):
    """A value or matrix failed a physical or numerical precondition."""


class ConfigError(StokesimError):
    """Experiment configuration could not be parsed or validated."""
