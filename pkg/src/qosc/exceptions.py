"""Exception types raised by qosc."""


class QDomainError(ValueError):
    """A parameter lies outside the domain where a formula is defined."""


class DenominatorPoleError(ArithmeticError):
    """A lower-parameter q-shifted factorial vanished before the series terminated."""


class NoTerminationError(ArithmeticError):
    """A series that was expected to terminate (or converge within its cap) did not."""


class ConvergenceError(ArithmeticError):
    """An infinite sum or product failed to reach the requested tolerance."""


class ContextMismatchError(ValueError):
    """Two objects built on different QContext instances were combined."""
