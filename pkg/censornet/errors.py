"""
Exceptions raised by censornet. All derive from ValueError so callers that
only care about "bad input" can catch that.
"""


class CensornetError(ValueError):
    """Base class for censornet errors."""

    code = "error"


class InvalidConfigError(CensornetError):
    """A configuration value or operation precondition is out of range."""

    code = "invalid-config"


class InvalidInputError(CensornetError):
    """Input arrays have the wrong shape or contain non-finite values."""

    code = "invalid-input"


class DegenerateFitError(CensornetError):
    """Least squares has no residual degrees of freedom."""

    code = "degenerate-fit"


class ConfigSyntaxError(InvalidConfigError):
    """The configuration file is not valid TOML."""

    code = "config-syntax"
