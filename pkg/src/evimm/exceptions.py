"""Exception types raised by the package."""


class DomainError(ValueError):
    """An argument lies outside the support or parameter space."""


class InsufficientData(ValueError):
    """Too few observations for the requested fit or diagnostic."""


class NoZeros(ValueError):
    """EVIMM needs at least one exact zero; fit an EVMM instead."""


class SingularInformation(ArithmeticError):
    """The observed information matrix could not be inverted."""


class TooManyFailures(RuntimeError):
    """Too many bootstrap replicate fits failed to converge."""
