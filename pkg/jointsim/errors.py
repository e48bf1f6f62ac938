"""
Exception hierarchy for jointsim.

Every error carries the process exit code the CLI uses for it, so library
callers can raise freely and only ``cli.main`` decides how to terminate.
"""

from typing import Any, Optional, Tuple


class JointSimError(Exception):
    """Base class for every error raised by jointsim."""

    exit_code = 1


class InvalidInputError(JointSimError, ValueError):
    """Raised when an argument is malformed (shape, finiteness, empty list)."""

    exit_code = 2


class SchemaError(InvalidInputError):
    """Raised when a family or similarity document does not match its schema."""

    exit_code = 2


class NumericalFailure(JointSimError):
    """Raised when a numerical kernel does not converge."""

    exit_code = 3

    def __init__(self, msg: str, iterations: Optional[int] = None):
        super().__init__(msg)
        self.iterations = iterations


class IllPosedStructureError(JointSimError):
    """
    Raised when Jordan or decomposition structure cannot be decided at the
    configured tolerances (clusters too close, refinement stalled).
    """

    exit_code = 3


class DegenerateDecompositionError(JointSimError):
    """Raised when the stacked part bases are numerically singular."""

    exit_code = 3


class CommutativityViolation(JointSimError):
    """Raised when a family that must commute does not."""

    exit_code = 4

    def __init__(self, msg: str, pair: Tuple[str, str] = ("", ""), residual: float = float("nan")):
        super().__init__(msg)
        self.pair = pair
        self.residual = residual


class DomainViolation(JointSimError):
    """Raised when an input lies outside the domain of a construction (e.g. r >= 1)."""

    exit_code = 5


class SingularMatrixError(DomainViolation):
    """Raised when a matrix to be inverted is numerically singular."""

    def __init__(self, msg: str, smallest_singular_value: float = 0.0):
        super().__init__(msg)
        self.smallest_singular_value = smallest_singular_value


class NotPowerBoundedError(DomainViolation):
    """Raised when a family member fails its power-bound certificate."""

    def __init__(self, msg: str, member: str = "", reason: str = ""):
        super().__init__(msg)
        self.member = member
        self.reason = reason


class VerificationFailure(JointSimError):
    """
    Raised when a produced similarity fails its final contraction check.

    The failed certificate is attached so callers can still write it out
    for diagnosis.
    """

    exit_code = 6

    def __init__(self, msg: str, certificate: Any = None, worst_member: str = "", norm: float = float("nan")):
        super().__init__(msg)
        self.certificate = certificate
        self.worst_member = worst_member
        self.norm = norm
