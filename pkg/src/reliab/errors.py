"""Exception hierarchy shared by every module of the package."""


class ReliabError(Exception):
    """Base class for all package errors."""


class DomainError(ReliabError, ValueError):
    """An argument lies outside the domain an operation accepts."""


class InvalidObservationError(DomainError):
    """A streaming training observation is non-finite or out of range."""


class AuditError(ReliabError):
    """The stability ledger received non-finite values."""


class TrainingFault(ReliabError):
    """Training diverged (NaN/Inf loss, gradient or parameter)."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step


class FormatError(ReliabError, ValueError):
    """A binary input file (IDX) is malformed."""


class ConfigError(ReliabError, ValueError):
    """An experiment configuration failed validation."""
