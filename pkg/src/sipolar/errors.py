"""Exception types shared across the package."""


class SipolarError(Exception):
    """Base class for all package errors."""


class BudgetExceededError(SipolarError):
    """An exact computation would materialize more symbols than allowed."""


class UnknownSymbolError(SipolarError, KeyError):
    """A side-information symbol is outside the support of the source."""

    def __str__(self):
        return Exception.__str__(self)


class ConfigError(SipolarError, ValueError):
    """Invalid experiment or command-line configuration."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
