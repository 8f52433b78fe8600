"""Exception types raised across the package."""


class OscwalkError(Exception):
    """Base class for all package errors."""


class NegativeProb(OscwalkError, ValueError):
    pass


class NotNormalized(OscwalkError, ValueError):
    pass


class TruncationBudgetExceeded(OscwalkError, RuntimeError):
    pass


class SlowConvergence(OscwalkError, RuntimeError):
    pass


class OutOfTable(OscwalkError, IndexError):
    pass


class WindowTooSmall(OscwalkError, RuntimeError):
    pass


class NoConvergence(OscwalkError, RuntimeError):
    pass


class DegenerateMeasure(OscwalkError, ValueError):
    pass


class HorizonExceeded(OscwalkError, RuntimeError):
    pass


class QuadratureNotConverged(OscwalkError, RuntimeError):
    pass


class ConfigError(OscwalkError, ValueError):
    pass
