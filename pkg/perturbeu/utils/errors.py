from typing import Optional


class PerturbEUError(Exception):
    """Base class for all package errors"""


class ParseError(PerturbEUError, ValueError):
    def __init__(self, message: str, row: Optional[int] = None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class ValidationError(PerturbEUError, ValueError):
    def __init__(
        self,
        message: str,
        subject: Optional[str] = None,
        trial: Optional[int] = None,
    ):
        self.subject = subject
        self.trial = trial
        prefix: str = ""
        if subject is not None:
            prefix = f"subject {subject}"
            if trial is not None:
                prefix = prefix + f", trial {trial}"
            prefix = prefix + ": "
        super().__init__(prefix + message)


class InvalidSequenceError(PerturbEUError, ValueError):
    pass


class UnsupportedConfigurationError(PerturbEUError, ValueError):
    pass


class CalibrationError(PerturbEUError, ValueError):
    pass


class SolverError(PerturbEUError, RuntimeError):
    def __init__(
        self, message: str, status: Optional[int] = None, residuals: dict = None
    ):
        self.status = status
        self.residuals = residuals or {}
        details = ""
        if self.residuals:
            details = " (" + ", ".join(
                f"{k}={v:.3g}" for k, v in self.residuals.items()
            ) + ")"
        super().__init__(f"{message}{details}")
