"""Shared exception taxonomy.

Every operation maps its failure modes onto one of these classes so the CLI
can translate them into exit codes uniformly.
"""


class FermigasError(Exception):
    """Base class for all package errors."""


class InvalidInputError(FermigasError, ValueError):
    """A precondition on the inputs was violated."""


class SolverFailureError(FermigasError, RuntimeError):
    """An iterative solver failed to converge or bracket a root."""


class AccuracyFailureError(FermigasError, RuntimeError):
    """A quadrature or table could not meet the requested tolerance."""


class ResourceLimitError(FermigasError, RuntimeError):
    """The requested computation exceeds the configured size budget."""


class IOFailureError(FermigasError, OSError):
    """Reading or writing an artifact failed."""
