"""
Exception hierarchy shared by every Splatfield app.

Management commands map NumericalDegeneracyError subclasses to exit code 3
and everything else derived from SplatfieldError to exit code 2.
"""


class SplatfieldError(Exception):
    """Base class for all library errors."""


class ParameterError(SplatfieldError, ValueError):
    """An argument is outside its admissible range."""


class DimensionError(ParameterError):
    """The domain dimension is not supported by the operation."""


class SizeError(ParameterError):
    """A collection is too small (or too large) for the operation."""


class ContainerFormatError(SplatfieldError):
    """A binary grid container could not be decoded."""


class NumericalDegeneracyError(SplatfieldError, ArithmeticError):
    """The computation has no well-defined numerical answer."""


class DegeneracyError(NumericalDegeneracyError):
    """Coincident points where distinct ones are required."""


class UndefinedRatioError(NumericalDegeneracyError):
    """A normalized quantity was requested for a zero reference."""


class RateFitError(NumericalDegeneracyError):
    """A log-log fit was requested on non-positive errors."""


class DegenerateSupportError(NumericalDegeneracyError):
    """The Shepard denominator underflowed at a query point."""

    def __init__(self, point, mass):
        self.point = tuple(float(v) for v in point)
        self.mass = float(mass)
        super().__init__(
            f'basis mass {self.mass:.3e} below support threshold at x={self.point}'
        )


class ConditioningError(NumericalDegeneracyError):
    """A linear system is singular or its matrix is indefinite."""

    def __init__(self, message, pivot=None):
        self.pivot = pivot
        if pivot is not None:
            message = f'{message} (smallest pivot {pivot:.3e})'
        super().__init__(message)


class ConfigFileError(ParameterError):
    """A run configuration file line could not be parsed."""

    def __init__(self, message, source='<config>', line=None, key=None):
        self.source = source
        self.line = line
        self.key = key
        where = source if line is None else f'{source}:{line}'
        if key:
            where = f'{where} [{key}]'
        super().__init__(f'{where}: {message}')
