"""Exception hierarchy shared by all floatpoly modules."""


class FloatPolyError(Exception):
    """Base class for every error raised by floatpoly."""


class InvalidParameter(FloatPolyError, ValueError):
    pass


class ConstructionFailure(FloatPolyError, RuntimeError):
    """Net construction could not reach the requested covering radius."""


class CenterNotInterior(FloatPolyError, ValueError):
    pass


class PolarRequiresOrigin(FloatPolyError, ValueError):
    pass


class IncompatibleRepresentation(FloatPolyError, ValueError):
    pass


class PointNotInterior(FloatPolyError, ValueError):
    pass


class DisjointInteriors(FloatPolyError, ValueError):
    pass


class UnsupportedDensity(FloatPolyError, ValueError):
    pass


class ParameterRegime(FloatPolyError, ValueError):
    """Requested (n, q) leaves the regime where the extreme-value interval exists."""


class OutOfDomain(FloatPolyError, ValueError):
    pass


class PossiblyEmpty(FloatPolyError, ValueError):
    pass


class EmptyLevelSet(FloatPolyError, ValueError):
    pass


class DeltaTooLarge(FloatPolyError, ValueError):
    pass


class InvalidPolygon(FloatPolyError, ValueError):
    pass


class EnvelopeFailure(FloatPolyError, RuntimeError):
    pass


class DegenerateHull(FloatPolyError, ValueError):
    pass


class CapExceeded(FloatPolyError, ValueError):
    def __init__(self, message, t_cap=None):
        super().__init__(message)
        self.t_cap = t_cap


class OutOfFamily(FloatPolyError, ValueError):
    pass


class ConfigError(FloatPolyError, ValueError):
    def __init__(self, message, field=None):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field
