"""Exception types raised by the numerical routines."""


class HoroflowError(Exception):
    """Base class for all library errors."""


class NumericalError(HoroflowError):
    """A computation hit an ill-conditioned or non-terminating regime."""


class NearCellBoundary(NumericalError):
    pass


class NotInSubgroup(HoroflowError, ValueError):
    pass


class DegenerateOrbit(NumericalError):
    pass


class VerificationFailed(NumericalError):
    pass


class VanishingDerivative(NumericalError):
    pass


class IterationCap(NumericalError):
    pass


class NoValidInterval(NumericalError):
    pass


class SupTooSmall(HoroflowError, ValueError):
    pass


class ScheduleViolation(HoroflowError, ValueError):
    pass


class OrderOverflow(HoroflowError, ValueError):
    pass
