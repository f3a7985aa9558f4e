"""Exception and warning types shared across the package."""


class InvalidArgument(ValueError):
    """A precondition on an argument does not hold."""


class NumericDomainError(ArithmeticError):
    """A sampled value is not finite."""


class UnsupportedExponent(InvalidArgument):
    """p <= 1: the minimizer of the moment objective need not be unique."""


class OutOfWindowError(InvalidArgument):
    """A Gabor atom does not fit inside the time or frequency window."""


class ConstructionFailure(RuntimeError):
    """The perturbed exact system could not meet its bounds.

    ``condition`` names the bound that was still violated when the search gave up.
    """

    def __init__(self, message, condition=None, element=None):
        super().__init__(message)
        self.condition = condition
        self.element = element


class HypothesisViolation(InvalidArgument):
    """A hypothesis required by a bound or a series estimate fails."""


class HypothesisWarning(UserWarning):
    """Issued when a computation proceeds although its hypothesis fails."""


class EdgeMassWarning(HypothesisWarning):
    """A function carries noticeable mass at the window edge, so circular shifts wrap it."""
