"""Exception hierarchy.

Validation problems (bad input, malformed configs) derive from
:class:`ValidationError`; failures detected while computing derive from
:class:`NumericalError`. The CLI maps the two families to distinct exit codes.
"""


class ModeQfiError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(ModeQfiError, ValueError):
    pass


class NumericalError(ModeQfiError, ArithmeticError):
    pass


class GridMismatchError(ValidationError):
    pass


class DimensionMismatchError(ValidationError):
    pass


class UnknownScenarioError(ValidationError):
    pass


class OrthonormalityError(NumericalError):
    pass


class TruncationError(NumericalError):
    pass


class NonHermitianError(NumericalError):
    pass


class NonPsdStateError(NumericalError):
    pass


class SpanDeficiencyError(NumericalError):
    pass


class DegenerateSeparationError(NumericalError):
    pass
