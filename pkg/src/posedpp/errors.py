"""Exception hierarchy shared by every module.

The CLI maps :class:`ConfigError`-like failures to exit code 1 and
:class:`NumericError`-like failures to exit code 2.
"""


class PoseDPPError(Exception):
    """Base class for all package errors."""


class ConfigError(PoseDPPError):
    exit_code = 1


class ParameterError(ConfigError, ValueError):
    """An argument is out of its documented range."""


class ShapeError(ConfigError, ValueError):
    """Array or record shapes are inconsistent."""


class ParseError(ConfigError):
    """An input file could not be parsed."""


class SchemaError(ParseError):
    """A parsed record does not match the expected schema."""


class NumericError(PoseDPPError, ArithmeticError):
    exit_code = 2


class RankError(NumericError):
    """Requested subset size exceeds the numerical rank of the kernel."""


class InstanceTooLargeError(NumericError):
    """Exhaustive enumeration would exceed the configured guard."""


class DegenerateGeometryError(NumericError):
    """Control points are collinear or duplicated."""


class CannotInpaintError(NumericError):
    """No known pixel is available to propagate from."""


class IntegrityError(PoseDPPError):
    """Exemplar-memory bookkeeping would be violated."""

    exit_code = 2


class DegenerateSelectionWarning(UserWarning):
    """A selected principal submatrix is singular."""


class RankFallbackWarning(UserWarning):
    """Greedy DPP selection ran out of rank and was filled by index."""
