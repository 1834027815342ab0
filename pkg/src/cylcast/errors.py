"""Exception hierarchy shared by the numerical modules."""


class CylcastError(Exception):
    """Base class for all library errors."""


class DomainError(CylcastError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class CapacityError(CylcastError, ValueError):
    """A request exceeds a configured cap (order, mode count, ...)."""


class BesselRangeError(CylcastError, OverflowError):
    """A scaled Bessel value is not representable as a double."""


class ProximityError(DomainError):
    """The field point is too close to the cylinder surface."""


class ConvergenceError(CylcastError, RuntimeError):
    """Tolerance not met within the configured budget.

    Carries the partial value and the error actually achieved.
    """

    def __init__(self, message, partial=None, achieved_error=None):
        super().__init__(message)
        self.partial = partial
        self.achieved_error = achieved_error


class TrapDestabilizedError(CylcastError, ValueError):
    """The dispersion curvature overwhelms the trap stiffness."""
