"""Exception hierarchy shared by all modules."""


class HydroelasticError(Exception):
    """Base class for every error raised by this package."""


class PreconditionError(HydroelasticError, ValueError):
    pass


class EvaluationError(HydroelasticError):
    """A pointwise evaluation produced a non-finite value.

    ``tau`` is the offending collocation point.
    """

    def __init__(self, message, tau=None):
        super().__init__(message)
        self.tau = tau


class OutOfBallError(HydroelasticError):
    """A state left the neighbourhood where the reduction is valid."""

    def __init__(self, quantity, value, bound):
        super().__init__(f"{quantity} = {value:.6g} violates the bound {bound}")
        self.quantity = quantity
        self.value = value
        self.bound = bound


class SingularParameterError(HydroelasticError, ZeroDivisionError):
    """lambda1 coincides with E11(1,0)."""


class NoConvergenceError(HydroelasticError):
    def __init__(self, message, history=()):
        super().__init__(message)
        self.history = list(history)


class BallExitError(NoConvergenceError):
    """Newton left the ball; a smaller amplitude usually helps."""


class InvalidModelError(HydroelasticError, ValueError):
    pass


class DomainError(HydroelasticError, ValueError):
    pass


class ConsistencyError(HydroelasticError):
    """Two independent computations that must agree did not."""


class RefusalError(HydroelasticError):
    """The requested double point is resonant or degenerate."""


class NotSimpleError(HydroelasticError):
    pass


class SchemaVersionError(HydroelasticError):
    pass


class CorruptFileError(HydroelasticError):
    pass
