"""Exception hierarchy.

``InputError`` covers malformed inputs and violated preconditions; the CLI maps
it to exit code 1. ``NumericalError`` covers failures discovered while
computing (non-convex evaluators, iterations that do not converge) and maps to
exit code 2.
"""


class BJError(Exception):
    """Base class for all package errors."""


class InputError(BJError, ValueError):
    """Invalid input or violated precondition."""


class DomainError(InputError):
    """A point or step falls outside a curve's domain."""


class NumericalError(BJError, ArithmeticError):
    """A numerical procedure broke down."""


class NonConvexError(NumericalError):
    """An evaluator assumed convex behaved non-convexly beyond tolerance."""


class ConvergenceError(NumericalError):
    """An iteration failed to reach its tolerance."""
