"""Numerics for the q-harmonic oscillator built on q-Charlier polynomials."""

from .charlier import QContext, LatticePoint
from .exceptions import (
    ContextMismatchError,
    ConvergenceError,
    DenominatorPoleError,
    NoTerminationError,
    QDomainError,
)
from .oscillator import GridFunction

__version__ = "0.1.0"
