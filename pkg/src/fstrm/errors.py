"""Exception types shared across the package."""


class FstrmError(Exception):
    """Base class for all package errors."""


class ValidationError(FstrmError, ValueError):
    """Input or configuration violates a documented precondition."""


class AliasingError(ValidationError):
    """A requested tone lies at or above the Nyquist frequency."""


class CsvFormatError(ValidationError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DensifyRefused(FstrmError):
    """Dense materialization would exceed the configured entry cap."""


class NoSignalEnergy(FstrmError, ValueError):
    pass


class NumericalFailure(FstrmError, ArithmeticError):
    pass
