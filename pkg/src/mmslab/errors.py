"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Bad user input: unknown family or task, malformed config, bad parameters."""


class NumericalError(RuntimeError):
    """A numerical routine failed: eigensolver breakdown, CG divergence, or a
    quantity that must be nonnegative came out materially negative."""
