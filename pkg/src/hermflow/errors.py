"""Exception hierarchy shared by all hermflow modules."""


class HermflowError(Exception):
    """Base class; the CLI maps subclasses to exit codes."""

    exit_code = 1


class ValidationError(HermflowError, ValueError):
    """Bad user input: geometry, parameters, shapes."""


class InvalidGeometryError(ValidationError):
    pass


class InvalidParameterError(ValidationError):
    pass


class ShapeError(ValidationError):
    pass


class InvalidInputError(ValidationError):
    pass


class SymmetryError(ValidationError):
    """An endomorphism that should be self-adjoint is not."""


class ProjectorError(ValidationError):
    pass


class UnsupportedDimensionError(ValidationError):
    pass


class InsufficientDataError(ValidationError):
    pass


class NumericalError(HermflowError, ArithmeticError):
    exit_code = 2


class PositivityError(NumericalError):
    """A metric lost positive definiteness at some site."""


class BlowUpError(NumericalError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class BranchError(NumericalError):
    """A square-root branch was requested outside its safe region."""


class ConstructionError(NumericalError):
    def __init__(self, message, sites=None):
        super().__init__(message)
        self.sites = sites if sites is not None else []


class ReportIOError(HermflowError):
    """Writing a report file failed; the message names the path."""
