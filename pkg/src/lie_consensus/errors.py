"""Exception types shared across the package."""


class DescriptorMismatch(ValueError):
    """Operands live on different groups."""


class AmbiguousLogarithm(ValueError):
    """Rotation angle within tolerance of pi; the axis sign is not unique."""


class OutOfBijectiveRange(ValueError):
    """Requested gradient magnitude is outside the bijective neighborhood."""


class PreconditionViolation(ValueError):
    """An argument violates a documented precondition."""


class NotATree(ValueError):
    """Operation requires a connected tree graph."""


class NoSolutionInU(RuntimeError):
    """No synchronous configuration exists with all errors in the bijective
    neighborhood (some required gradient magnitude reaches the radius mu)."""


class NonFiniteState(ArithmeticError):
    """A simulated state acquired a NaN or infinite entry."""


class ConfigError(ValueError):
    """Scenario configuration failed to parse or validate."""
