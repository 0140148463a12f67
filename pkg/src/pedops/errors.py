"""Exception types raised across the package."""


class ParameterError(ValueError):
    """Invalid operator parameters or an invalid parameter combination."""


class RangeError(ValueError):
    """Index outside the support of the operator (e.g. k > n + p for lambda = -1)."""


class RatioUndefinedError(ArithmeticError):
    """Consecutive weight ratio requested where the current weight vanishes."""


class MomentUndefinedError(ArithmeticError):
    """A closed-form moment denominator is (numerically) zero or negative."""


class EvaluationError(ArithmeticError):
    """A user function could not be evaluated at a required point."""

    def __init__(self, message, point=None, node=None):
        super().__init__(message)
        self.point = point
        self.node = node


class ExpressionSyntaxError(ValueError):
    def __init__(self, message, offset, expected=()):
        detail = f"{message} at offset {offset}"
        if expected:
            detail += f" (expected one of: {', '.join(sorted(expected))})"
        super().__init__(detail)
        self.offset = offset
        self.expected = frozenset(expected)


class ClassMembershipError(ValueError):
    """A function fails a sampled membership test for the class a bound requires."""
