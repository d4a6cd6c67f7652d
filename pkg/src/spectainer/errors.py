"""Shared exception types."""


class SpectainerError(Exception):
    """Base class for all library errors."""


class ContractViolation(SpectainerError, ValueError):
    """An argument violates a documented precondition."""


class NumericalFailure(SpectainerError, RuntimeError):
    """A numerical routine failed to converge or produced garbage."""


class InstanceLookupError(SpectainerError, KeyError):
    """Unknown builtin instance name."""


class SolverStalled(SpectainerError, RuntimeError):
    """The SDP solver could not certify feasibility either way.

    Carries the partial solution so callers can surface an Unknown verdict
    instead of guessing.
    """

    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


class CertificateInvalid(SpectainerError, RuntimeError):
    """A solver-produced certificate failed independent re-verification."""
