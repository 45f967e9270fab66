"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration value or combination."""


class ParseError(ValueError):
    """Malformed input file; message carries the file and line number."""


class NumericalError(RuntimeError):
    """Non-finite value encountered where computation cannot continue."""
