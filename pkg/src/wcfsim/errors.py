"""Exception types shared across the package."""


class WcfError(Exception):
    """Base class for all wcfsim errors."""


class DomainError(WcfError, ValueError):
    """An input lies outside its physical domain (e.g. a reflectivity > 1)."""


class DegenerateError(WcfError, ZeroDivisionError):
    """A ratio is undefined because its denominator vanishes."""


class NumericalError(WcfError, ArithmeticError):
    """A numerical routine failed to converge or produced unusable output."""


class ConfigError(WcfError, ValueError):
    """Invalid experiment configuration; the message names the offending field."""
