"""Exception hierarchy shared by the solver, the inversion and the harness."""


class GibcError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgument(GibcError, ValueError):
    pass


class DomainError(GibcError, ValueError):
    pass


class BesselOverflowError(GibcError, OverflowError):
    pass


class GeometryError(GibcError, ValueError):
    pass


class DeformationTooLarge(GeometryError):
    pass


class AliasingError(GibcError, ValueError):
    pass


class ConstraintViolation(GibcError, ValueError):
    """Impedance coefficients violate the well-posedness sign conditions."""


class ShapeMismatch(GibcError, ValueError):
    pass


class NumericalError(GibcError, RuntimeError):
    """A numerical step failed (singular system, degenerate denominator, ...)."""


class SingularMatrix(NumericalError):
    pass


class DegenerateDenominator(NumericalError):
    pass


class ConfigError(GibcError, ValueError):
    """Bad experiment configuration. ``key`` names the offending entry."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key
