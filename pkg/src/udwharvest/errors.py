"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class HarvestError(Exception):
    """Base class for all package errors."""

    @property
    def code(self) -> str:
        return type(self).__name__


class ConfigError(HarvestError, ValueError):
    """A configuration violates a domain invariant."""


class MissingCutoff(ConfigError):
    pass


class ForbiddenCutoff(ConfigError):
    pass


class UnsupportedDimension(ConfigError):
    pass


class NegativeWidth(ConfigError):
    pass


class InvalidParameter(ConfigError):
    pass


class NoisyNegativeDiagonal(HarvestError, ValueError):
    """1 - 2L < 0: the leading-order density matrix is outside the perturbative regime."""


class NonConvergence(HarvestError, ArithmeticError):
    """Quadrature did not reach its tolerance; carries the best estimate."""

    def __init__(self, message: str, value: complex = float("nan"), error: float = float("inf")):
        super().__init__(message)
        self.value = value
        self.error = error


class PathDisagreement(HarvestError, AssertionError):
    pass


class OnLightCone(HarvestError, ValueError):
    pass


class UnsupportedOrder(HarvestError, ValueError):
    pass


class WrongRegime(HarvestError, ValueError):
    pass


class UnresolvedScales(HarvestError, ValueError):
    pass


class StepNotConverged(HarvestError, ArithmeticError):
    pass


class FaddeevaOverflow(HarvestError, OverflowError):
    pass
