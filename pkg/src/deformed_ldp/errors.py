"""Exception hierarchy.

ConfigError covers bad user input (CLI exit code 2); ComputeError covers
requests outside a function's mathematical domain (exit code 3).
"""


class ConfigError(ValueError):
    pass


class ComputeError(ArithmeticError):
    pass


class AtomCollision(ComputeError):
    """Evaluation point coincides with an atom."""


class UnboundedQuantile(ConfigError):
    pass


class DomainAboveSupport(ComputeError):
    pass


class AboveEdge(ComputeError):
    """Point lies to the right of the left edge of the convolved law."""


class BelowBranch(ComputeError):
    pass


class OutlierAtEdge(ComputeError):
    pass


class AtBranchPoint(ComputeError):
    pass


class ThetaOutOfRange(ComputeError):
    pass


class DegenerateDirection(ComputeError):
    pass


class MinimizerMismatch(ComputeError):
    """A random restart found a lower value than the closed-form minimizer."""
