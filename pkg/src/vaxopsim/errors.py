"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid model or experiment parameters; aborts before any run."""
