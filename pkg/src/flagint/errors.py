"""Exception hierarchy shared by every flagint module."""

from __future__ import annotations


class FlagintError(Exception):
    """Base class for all errors raised by flagint."""


class InvalidInputError(FlagintError, ValueError):
    """Input violates a structural precondition (shape, finiteness, arity)."""


class DimensionError(InvalidInputError):
    """Operands have incompatible chart or algebra dimensions."""


class SingularMatrixError(FlagintError, ArithmeticError):
    """A group element that must be invertible is (numerically) singular."""


class OutOfDomainError(FlagintError, ArithmeticError):
    """An operation was applied outside its supported domain.

    Raised by :func:`flagint.algebra.mat_log` when ``||G - I|| >= 0.5``; in
    practice this means the mesh or loop size used by the caller is too coarse.
    """


class NotIntegrableError(FlagintError):
    """A connection failed the numerical flatness certificate."""

    def __init__(self, message: str, residual: float) -> None:
        super().__init__(message)
        self.residual = residual


class ConfigError(FlagintError):
    """An experiment configuration is malformed or inconsistent."""
