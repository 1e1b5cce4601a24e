"""Exception types raised across the package."""


class IsorangeError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(IsorangeError, ValueError):
    pass


class ConvergenceError(IsorangeError, RuntimeError):
    """Root bracketing failed or the bisection ran out of iterations."""


class NotMonotoneError(IsorangeError, ValueError):
    pass


class FitDomainError(IsorangeError, ValueError):
    pass


class PosetError(IsorangeError, ValueError):
    """Malformed order: unknown ids or a cycle in the edge list."""


class LatticeCapError(IsorangeError, ValueError):
    pass


class ZeroMassError(IsorangeError, ValueError):
    pass


class IntervalTypeError(IsorangeError, ValueError):
    pass


class NonSolutionError(IsorangeError, ValueError):
    pass


class EmptyBandError(IsorangeError, ValueError):
    pass
