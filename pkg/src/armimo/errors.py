"""Exception hierarchy.

Every error carries a stable class name; the CLI prints it on stderr when a
numerical failure aborts a run.
"""


class ArmimoError(Exception):
    """Base class for all package errors."""


class NotPSD(ArmimoError, ValueError):
    """A covariance (or process-noise covariance) is not positive semidefinite."""


class SingularBlock(ArmimoError, ValueError):
    """The stacked observation covariance cannot be inverted."""


class SolveFailure(ArmimoError, ArithmeticError):
    """A linear solve did not meet its residual tolerance."""


class NoConvergence(ArmimoError, ArithmeticError):
    """A fixed-point iteration hit its iteration cap."""


class BracketFailure(ArmimoError, ArithmeticError):
    """A scalar root could not be bracketed."""


class PoleProximity(ArmimoError, ValueError):
    """A Stieltjes evaluation point sits on a sample."""


class ZeroVector(ArmimoError, ValueError):
    """A combiner was requested for an all-zero channel proxy."""


class OutOfDomain(ArmimoError, ValueError):
    """An argument lies outside the feasible pilot power interval."""


class UnknownPreset(ArmimoError, KeyError):
    """No figure preset with the given name."""


class ConfigError(ArmimoError, ValueError):
    """A scenario configuration is malformed."""
