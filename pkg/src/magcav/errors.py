"""Exception hierarchy shared by every magcav module."""


class MagcavError(Exception):
    """Base class for all toolkit errors."""


class InputError(MagcavError, ValueError):
    """Invalid argument or parameter value."""


class DomainError(InputError):
    """Argument outside the mathematical domain of an operation."""


class SingularModelError(MagcavError, ArithmeticError):
    """The model has an exact pole at a requested frequency."""

    def __init__(self, message, frequency=None):
        super().__init__(message)
        self.frequency = frequency


class NumericalError(MagcavError, ArithmeticError):
    """Non-finite values appeared during evaluation or optimization."""


class FitError(MagcavError):
    """A fit could not be carried out."""


class MapFitError(FitError):
    """Too many columns of a map failed to fit."""

    def __init__(self, message, failed=()):
        super().__init__(message)
        self.failed = list(failed)


class DataFormatError(MagcavError):
    """Base for all file-format problems."""


class ParseError(DataFormatError):
    def __init__(self, message, line=None, path=None):
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        prefix = ":".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)
        self.line = line
        self.path = path


class StructuralError(DataFormatError):
    """File parses row by row but its overall shape is wrong."""


class SchemaError(DataFormatError):
    """Structured document does not match the expected schema."""

    def __init__(self, message, key=None, version=None):
        super().__init__(message)
        self.key = key
        self.version = version
