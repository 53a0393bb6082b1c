"""Exception hierarchy.

Everything raised on purpose derives from :class:`AhsError`. The CLI maps
:class:`ConfigurationError` subclasses to exit code 2 and
:class:`IntegrationError` subclasses to exit code 3.
"""


class AhsError(Exception):
    """Base class for all package errors."""


class ConfigurationError(AhsError, ValueError):
    """Input that cannot describe a runnable experiment."""


class ValidationError(ConfigurationError):
    """A program violates machine constraints or its own invariants."""


class SpacingViolation(ValidationError):
    def __init__(self, i: int, j: int, distance: float, min_spacing: float):
        self.pair = (i, j)
        self.distance = distance
        self.min_spacing = min_spacing
        super().__init__(
            f"sites {i} and {j} are {distance:.6g} um apart (min spacing {min_spacing:g} um)"
        )


class OutOfField(ValidationError):
    def __init__(self, index: int, x: float, y: float, width: float, height: float):
        self.index = index
        self.position = (x, y)
        super().__init__(
            f"site {index} at ({x:.6g}, {y:.6g}) um lies outside the "
            f"{width:g} x {height:g} um field of view"
        )


class TooManyAtoms(ValidationError):
    pass


class WaveformMismatch(ValidationError):
    pass


class DegenerateGeometry(ValidationError):
    pass


class DriveMismatch(ValidationError):
    pass


class DurationMismatch(ValidationError):
    pass


class JitterTooLarge(ValidationError):
    pass


class PlacementExhausted(ConfigurationError):
    pass


class OutOfRange(AhsError, ValueError):
    pass


class LengthMismatch(AhsError, ValueError):
    pass


class DimensionMismatch(AhsError, ValueError):
    pass


class TooLarge(AhsError, ValueError):
    pass


class ParseError(ConfigurationError):
    def __init__(self, message: str, location: str = "$"):
        self.location = location
        super().__init__(f"{location}: {message}")


class IntegrationError(AhsError, ArithmeticError):
    """Numerical propagation failed."""


class NormDrift(IntegrationError):
    pass
