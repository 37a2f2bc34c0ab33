"""Exception hierarchy shared across the package.

Two broad families: bad inputs (sets, weights, configs that violate their
invariants) and numerical failures detected at run time.  The CLI maps
them to distinct exit codes.
"""


class RandprojError(Exception):
    """Base class for all package errors."""


class InvalidInputError(RandprojError, ValueError):
    """Malformed problem data, weights, or configuration."""


class InvalidSetError(InvalidInputError):
    """A set oracle violates its construction invariants (zero normal, ...)."""


class InvalidConfigError(InvalidInputError):
    """A solver configuration is inconsistent (stepsize window, N = 0, ...)."""


class NumericalFailureError(RandprojError, RuntimeError):
    """A run produced non-finite iterates or a tolerance breach mid-flight.

    When raised by a solver the partially recorded trace is attached as
    the ``trace`` attribute.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class InfeasibleAggregateError(NumericalFailureError):
    """An aggregated inequality reduced to 0 <= negative constant."""


class DegenerateCutError(NumericalFailureError):
    """A separation/supporting cut came back with a zero normal."""


class NoRegularityError(NumericalFailureError):
    """The expectation matrix carries no usable spectrum (all zero)."""


class InconsistentSystemError(InvalidInputError):
    """Right-hand side outside the range of the system matrix."""


class EstimateUndefinedError(InvalidInputError):
    """An empirical estimator got no usable probes (all feasible/skipped)."""
