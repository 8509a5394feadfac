"""Exception and warning types raised across the toolkit.

The three base classes map onto the CLI exit-code contract:
:class:`DataError` (exit 4) and :class:`EstimationError` (exit 5).
Everything else that is a caller mistake derives from ``ValueError``.
"""


class UsvYawError(Exception):
    """Base class for all toolkit errors."""


class DataError(UsvYawError, ValueError):
    """Malformed or unusable input data."""


class EstimationError(UsvYawError, ArithmeticError):
    """Numerical failure during identification."""


# model / sim

class IntegratorError(UsvYawError, ZeroDivisionError):
    """DC gain requested for a model with a pole at the origin."""


class InvalidSamplePeriod(UsvYawError, ValueError):
    pass


class SampleRateMismatch(UsvYawError, ValueError):
    pass


# signals

class InvalidWaveSpec(UsvYawError, ValueError):
    pass


class ParseError(DataError):
    """CSV content could not be parsed.

    ``row`` is the 1-based line number in the source, ``column`` the
    column name (or ``None`` when the whole line is at fault).
    """

    def __init__(self, message, row=None, column=None):
        self.row = row
        self.column = column
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class NonUniformSampling(DataError):
    pass


class NonFiniteValue(DataError):
    pass


class TooFewSamples(DataError):
    pass


class SplitTooSmall(DataError):
    pass


# estim

class RankDeficientRegression(EstimationError):
    """The input does not excite the regression enough to identify it."""


class DivergedNonFinite(EstimationError):
    def __init__(self, message, last_good=None):
        self.last_good = last_good
        super().__init__(message)


class NoDescentDirection(EstimationError):
    pass


class ConstantReference(UsvYawError, ValueError):
    """The measured series is constant so the fit normaliser is zero."""


class LengthMismatch(UsvYawError, ValueError):
    pass


class InitializerWarning(UserWarning):
    """The equation-error initializer had to clamp a non-physical result."""


class UnstableInitializer(InitializerWarning):
    """Discrete poles of the regression were on or outside the unit circle."""
