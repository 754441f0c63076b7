"""Exception types shared across the package."""


class GkpdError(Exception):
    """Base class for all errors raised by gkpd."""


class ShapeError(GkpdError, ValueError):
    """Tensor shapes are incompatible with the requested operation."""


class ParameterError(GkpdError, ValueError):
    """A scalar argument (rank, budget, ...) is out of its valid range."""


class NumericError(GkpdError, ArithmeticError):
    """Non-finite input or an iterative method failed to converge."""
