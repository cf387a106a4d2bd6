"""Exception types shared across the package."""


class NagpError(Exception):
    """Base class for all errors raised by nagp."""


class InvalidArgument(NagpError, ValueError):
    pass


class UndefinedRatio(NagpError, ZeroDivisionError):
    pass


class DegenerateSpectrum(NagpError):
    """Raised when the Laplacian has a (near) zero second eigenvalue."""


class SolverFailure(NagpError):
    pass


class GraphTooSmall(InvalidArgument):
    pass


class TrainingDiverged(NagpError, FloatingPointError):
    pass


class CorruptModel(NagpError):
    pass


class ParseError(NagpError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnsupportedField(ParseError):
    pass


class CoarseningStalled(UserWarning):
    """Warning emitted when heavy-edge matching cannot reach the target size."""
