"""Exception and warning types raised across the package."""


class IonGatesError(Exception):
    """Base class for all package errors."""


class ConfigError(IonGatesError):
    pass


class NoConvergence(IonGatesError):
    pass


class NotOrthogonal(IonGatesError):
    pass


class NegativeCurvature(IonGatesError):
    pass


class SpeedLimit(IonGatesError):
    """Gate time is below pi/nu1; tones can no longer sit between the modes.

    Pass ``allow_fast=True`` to the basis constructor to override.
    """


class EmptyNullSpace(IonGatesError):
    pass


class DimensionMismatch(IonGatesError):
    pass


class ZeroMatrix(IonGatesError):
    pass


class Infeasible(IonGatesError):
    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class DegenerateDirection(IonGatesError):
    pass


class ProjectionFailed(IonGatesError):
    pass


class ZeroTarget(IonGatesError):
    pass


class BadParams(IonGatesError):
    pass


class OddRegister(IonGatesError):
    pass


class TooLarge(IonGatesError):
    pass


class TruncationError(IonGatesError):
    pass


class DimensionGuard(IonGatesError):
    pass


class LambDickeWarning(UserWarning):
    pass
