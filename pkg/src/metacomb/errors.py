"""Exception hierarchy shared by every stage of the pipeline."""


class MetacombError(Exception):
    """Base class for all errors raised by metacomb."""


class DimensionError(MetacombError, ValueError):
    """Array or vector lengths do not line up."""


class ParameterError(MetacombError, ValueError):
    """An argument is outside its admissible range."""


class DataError(MetacombError, ValueError):
    """Input data is malformed (bad cell, missing column, NaN, ...)."""


class DegenerateDataError(DataError):
    """Training data cannot support a finite fit, e.g. a single-class target."""


class MappingError(DataError):
    """A label could not be mapped to the binary taxonomy."""


class SingularityError(MetacombError, ArithmeticError):
    """A quantity is undefined because a divisor is zero (e.g. W == 0)."""


class DegenerateClassError(MetacombError, ValueError):
    """A class has no positive gold instance, so its norm is zero."""
