"""Exception hierarchy shared by all simulator modules."""


class SimulationError(Exception):
    """Base class for every error raised by rbcsim."""


class NumericFaultError(SimulationError, ArithmeticError):
    """A field or scalar became NaN or infinite."""


class DegenerateFieldError(SimulationError, ValueError):
    """Operation needs a field with positive power."""


class InvalidGeometryError(SimulationError, ValueError):
    pass


class InvalidDistanceError(SimulationError, ValueError):
    pass


class ShiftOverflowError(SimulationError, ValueError):
    """Lateral shift would push content into the periodic guard band."""


class AliasingRiskError(SimulationError, ValueError):
    """Grid pitch too coarse for a lens phase over the given aperture."""


class NotSupportedError(SimulationError, NotImplementedError):
    pass


class UnboundedPowerError(SimulationError, ValueError):
    """Circulating power diverges (output mirror reflectivity >= 1)."""


class ConfigError(SimulationError, ValueError):
    pass
