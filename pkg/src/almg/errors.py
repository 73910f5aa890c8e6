"""Exception types shared across the package."""


class InvalidInput(ValueError):
    """Bad parameters, selectors or operator names."""


class NumericError(RuntimeError):
    """A numerical stage (eigensolver, propagation) failed."""


class UnreachableQuench(ValueError):
    """The tangent line never meets the requested critical line inside [0, 1]."""
