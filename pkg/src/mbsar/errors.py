"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid scenario configuration or operation parameters."""


class NumericalError(RuntimeError):
    """Numerical failure (e.g. filter covariance loses positive-definiteness)."""
