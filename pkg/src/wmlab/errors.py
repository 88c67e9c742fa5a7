"""Exception types shared across the package."""
from __future__ import annotations


class WmLabError(Exception):
    """Base class."""


class DimensionMismatch(WmLabError, ValueError):
    pass


class NotLefschetzType(WmLabError):
    def __init__(self, message: str, *, axis: str | None = None, index=None):
        super().__init__(message)
        self.axis = axis
        self.index = index


class WrongDegree(WmLabError):
    pass


class NotLLinear(WmLabError):
    pass


class DualityViolated(WmLabError):
    def __init__(self, message: str, *, witness=None):
        super().__init__(message)
        self.witness = witness


class HypothesisFailed(WmLabError):
    def __init__(self, message: str, *, which: str, step=None):
        super().__init__(message)
        self.which = which
        self.step = step


class DecompositionFailed(WmLabError):
    def __init__(self, message: str, *, slot=None):
        super().__init__(message)
        self.slot = slot


class NotNilpotent(WmLabError):
    pass


class ValidationFailed(WmLabError):
    def __init__(self, message: str, *, axiom: str, level=None):
        super().__init__(message)
        self.axiom = axiom
        self.level = level


class NoRoom(WmLabError):
    pass


class ProductMismatch(WmLabError):
    pass


class NotCoprime(WmLabError):
    pass


class MinPolyMismatch(WmLabError):
    pass


class CommutationFailed(WmLabError):
    def __init__(self, message: str, *, which: str, slot=None):
        super().__init__(message)
        self.which = which
        self.slot = slot


class InstanceFormatError(WmLabError):
    def __init__(self, message: str, *, location: str | None = None):
        super().__init__(message)
        self.location = location
