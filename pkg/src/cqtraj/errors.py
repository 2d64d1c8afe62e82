"""Exception hierarchy.

Two families: ``DomainError`` for inputs that violate an operation's
preconditions (bad state, bad grid) and ``NumericalError`` for failures
that happen while computing (poles hit mid-flight, step underflow).
The CLI maps the first to exit code 2 and the second to exit code 3.
"""


class CQTError(Exception):
    """Base class for all package errors."""


class DomainError(CQTError, ValueError):
    pass


class NumericalError(CQTError, ArithmeticError):
    pass


class UnsupportedState(DomainError):
    pass


class NotNormalizable(DomainError):
    pass


class GridTooCoarse(DomainError):
    pass


class PoleOnPath(DomainError):
    """A real-axis sample point sits inside a node-exclusion interval."""


class PoleEncountered(NumericalError):
    """Evaluation at (or integration into) a node of the wavefunction.

    When raised by the integrator, ``trajectory`` holds the partial path
    up to the last accepted step.
    """

    def __init__(self, message, point=None, trajectory=None):
        super().__init__(message)
        self.point = point
        self.trajectory = trajectory


class NonConvergence(NumericalError):
    def __init__(self, message, point=None, t=None, trajectory=None):
        super().__init__(message)
        self.point = point
        self.t = t
        self.trajectory = trajectory


class NotClosed(NumericalError):
    pass


class NoCrossing(NumericalError):
    pass


class NotFinite(NumericalError):
    pass


class QuadratureError(NumericalError):
    pass
