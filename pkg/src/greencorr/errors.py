"""Exception types shared across the package."""


class GreencorrError(Exception):
    """Base class for all package errors."""


class DimensionError(GreencorrError):
    """Matrix or subspace shapes are incompatible."""


class CompatibilityError(GreencorrError):
    """Objects live over different groups or different primes."""


class ContainmentError(GreencorrError):
    """A claimed subgroup relation does not hold."""


class SizeError(GreencorrError):
    """A configured size cap (group order, dimension, budget) was exceeded."""


class PreconditionError(GreencorrError):
    """An operation's stated precondition failed on the given input."""


class InvariantViolation(GreencorrError):
    """An internal invariant that theory guarantees was observed to fail.

    Seeing this exception means a bug, not bad input.
    """


class UndecidedError(GreencorrError):
    """A decision procedure ran out of budget without a certified answer.

    Carries the offending object in ``payload`` so callers can report it.
    """

    def __init__(self, message, payload=None):
        super().__init__(message)
        self.payload = payload


class ParseError(GreencorrError):
    """Malformed input file."""
