"""Exception hierarchy shared by every module of the package."""


class IFSMError(Exception):
    """Base class for all package errors."""


class ValidationError(IFSMError):
    pass


class EmptyParameterSet(ValidationError):
    pass


class NonPositiveDensity(ValidationError):
    pass


class MapEscapesDomain(ValidationError):
    pass


class OutOfDomain(IFSMError):
    pass


class UnknownParameter(IFSMError, KeyError):
    pass


class GridMismatch(IFSMError):
    pass


class NumericalError(IFSMError):
    """Raised when an iterative method fails; ``stage`` tags pipeline position."""

    def __init__(self, message, residual=None, stage=None):
        super().__init__(message)
        self.residual = residual
        self.stage = stage


class NoConvergence(NumericalError):
    pass


class DegenerateOperator(NumericalError):
    pass


class OptimizerDiverged(NumericalError):
    pass


class NonPositiveEigenfunction(IFSMError):
    pass


class NonPositiveFunction(IFSMError):
    pass


class NotNormalized(IFSMError):
    pass


class AbsoluteContinuityViolated(IFSMError):
    pass


class EmptyOrbit(IFSMError):
    pass


class LevelTooFine(IFSMError):
    pass


class NotDyadicFamily(IFSMError):
    pass


class SchemaError(IFSMError):
    def __init__(self, message, path=()):
        loc = "/".join(str(p) for p in path)
        super().__init__(f"{loc or '<root>'}: {message}")
        self.path = tuple(path)


class ExpressionSyntaxError(IFSMError, SyntaxError):
    def __init__(self, message, position):
        super().__init__(f"{message} at position {position}")
        self.position = position


class UnknownIdentifier(ExpressionSyntaxError):
    pass


class ExpressionDomainError(IFSMError, ArithmeticError):
    pass


class NonNumericCell(IFSMError, ValueError):
    def __init__(self, row, value):
        super().__init__(f"non-numeric cell {value!r} in row {row}")
        self.row = row


class TooShort(IFSMError, ValueError):
    pass


class ZeroPreviousValue(IFSMError, ValueError):
    def __init__(self, row):
        super().__init__(f"previous value is zero at row {row}")
        self.row = row


class IoError(IFSMError, OSError):
    """Reading or writing a file failed."""
