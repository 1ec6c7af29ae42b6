"""Exception hierarchy shared by every camplab module."""


class CampLabError(Exception):
    """Base class for all camplab errors."""


class DomainError(CampLabError, ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class OnBoundaryError(DomainError):
    """The soft-threshold Jacobian was requested on the threshold circle."""


class AbovePhaseTransitionError(CampLabError):
    """Noise-free state evolution has no finite stable fixed point at zero."""


class NumericalFailure(CampLabError, ArithmeticError):
    """An iterative solver produced non-finite values or diverged."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class SizeCapError(CampLabError):
    """The per-edge message-passing validator refuses oversized problems."""


class ConfigError(CampLabError, ValueError):
    """A CLI configuration is malformed; ``key`` names the offending entry."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key
