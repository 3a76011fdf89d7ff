"""Exception hierarchy shared by all modules."""


class CurveError(Exception):
    """Base class for every error raised by :mod:`affinecurve`."""


class NotConvex(CurveError):
    pass


class DegenerateCurve(CurveError):
    pass


class BasePointOutside(CurveError):
    pass


class StartPointOffCurve(CurveError):
    pass


class ParameterOutOfRange(CurveError):
    pass


class SingularPoint(CurveError):
    """Raised when a density or tangent is requested at a corner."""


class TurningTooLarge(CurveError):
    pass


class ResolutionExhausted(CurveError):
    """The chart has too few nodes to certify a covering at the requested scale."""


class UnderResolved(CurveError):
    """Oscillatory quadrature would not resolve the phase."""


class QuadratureFailure(CurveError):
    pass


class ExponentOutOfRange(CurveError):
    pass


class ConsistencyError(CurveError):
    """An identity that must hold by construction was violated numerically."""


class ConfigError(CurveError):
    pass


class ResolutionWarning(UserWarning):
    """A computation is close to the limit of what the chart resolves."""


class BoundaryAttainmentWarning(UserWarning):
    """A supremum over a truncated family is attained on the family's edge."""
