"""Exception hierarchy shared across the simulator.

The CLI maps ConfigError to exit code 2 and NumericError to exit code 3;
everything else is a plain bug.
"""


class SimError(Exception):
    """Base class for all simulator errors."""


class ConfigError(SimError):
    """Invalid configuration (bad field, missing profile, broken invariant)."""


class SizeMismatchError(SimError, ValueError):
    """Operands have incompatible shapes (matmul dims, block lengths, ...)."""


class FramingError(SimError, ValueError):
    """Input stream length does not divide into the required frame size."""


class ParameterError(SimError, ValueError):
    """A numeric parameter is out of its documented range."""


class NumericError(SimError, ArithmeticError):
    """A numerical routine failed (non-convergence, non-finite values)."""


class SingularMatrixError(NumericError):
    """Matrix is singular or too ill-conditioned to solve reliably."""


class BufferStateError(SimError, RuntimeError):
    """Operation requires buffered data that is not present."""
