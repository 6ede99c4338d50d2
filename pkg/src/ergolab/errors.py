"""Exception types raised across the package."""


class ErgolabError(ValueError):
    """Base class for all package errors."""


class DomainMismatch(ErgolabError):
    """Operands live on different groups, or a function/character does not fit the group."""


class DepthExceeded(ErgolabError):
    """A prefix or quotient level is deeper than the carrier allows."""


class SizeExceeded(ErgolabError):
    """A finite enumeration would be too large."""


class NotQuotientRepresentable(ErgolabError):
    """The function cannot be written exactly on a finite quotient."""


class InvalidSequence(ErgolabError):
    """An integer sequence is not strictly increasing or too short."""


class ConfigError(ErgolabError):
    """An experiment configuration is malformed or invalid."""
