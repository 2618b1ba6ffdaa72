"""Exception hierarchy shared by all solvers.

The CLI maps each class onto a process exit code, so solver code raises
these rather than returning status flags.
"""


class QRabiError(Exception):
    """Base class for every error raised by this package."""


class ConditionError(QRabiError, ValueError):
    """A parameter precondition of an operation does not hold."""


class PoleError(ConditionError):
    """Trial energy sits inside a pole exclusion zone of a recurrence."""


class RadiusError(ConditionError):
    """Series evaluated outside (or too close to) its disk of convergence."""


class MethodNotApplicable(QRabiError):
    """The requested method is undefined for this parameter point."""


class NumericalFailure(QRabiError):
    """A numerical procedure did not converge."""
