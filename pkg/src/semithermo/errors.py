"""Exception taxonomy shared across the package."""


class BudgetError(RuntimeError):
    """Word-space enumeration (or a grid probe) would exceed the configured budget."""


class GridTooCoarseError(ValueError):
    """Requested grid cannot resolve the probe scale (M < 2/epsilon)."""


class NotAffineError(ValueError):
    """Operation needs an affine word but the word contains a nonlinear letter."""


class ApproximationDomainError(ValueError):
    """Inputs leave the regime where an exact formula is valid (e.g. wraparound)."""


class PreconditionError(ValueError):
    """A documented precondition of a probe or construction is violated."""
