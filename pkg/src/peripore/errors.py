"""Exception types raised by the package."""

from __future__ import annotations


class PeriporeError(Exception):
    """Base class for all package errors."""


class ConfigurationError(PeriporeError):
    """A config file, problem definition, or CLI invocation is invalid.

    The message always names the offending key or flag.
    """


class SingularBondError(PeriporeError):
    """A bond collapsed to zero deformed length; the direction state is undefined."""

    def __init__(self, i: int, j: int):
        self.i = int(i)
        self.j = int(j)
        super().__init__(
            f"bond between particles {self.i} and {self.j} has zero deformed length; "
            "the deformed direction state is undefined"
        )


class SolveRefusalError(PeriporeError):
    """Preconditions for a solve are not met (e.g. an unconstrained isolated particle)."""


class SingularOperatorError(PeriporeError):
    """The linearized operator is singular on the free dofs.

    Usually means rigid-body modes were left unconstrained.
    """


class NonConvergenceError(PeriporeError):
    """The iterative solver hit its iteration budget before reaching tolerance."""

    def __init__(self, message: str, residual_history=None):
        self.residual_history = list(residual_history or [])
        super().__init__(message)
