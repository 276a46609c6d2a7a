"""Exception types shared across the package."""


class DomainError(ValueError):
    """A coordinate lies outside the domain a surface or grid was fitted on."""


class ConfigError(ValueError):
    """A configuration value is inconsistent or insufficient for the request."""


class DataError(ValueError):
    """Input data violates a structural requirement (shape, order, finiteness)."""
