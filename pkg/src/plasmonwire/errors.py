"""Exception types shared across the package."""


class PlasmonWireError(Exception):
    """Base class for all package-specific errors."""


class DomainError(PlasmonWireError, ValueError):
    """Argument outside the supported domain of an operation."""


class SingularityError(DomainError):
    """Evaluation requested exactly at a singular point (e.g. Y_n or H_n at 0)."""


class PoleError(PlasmonWireError):
    """The mode function hit a pole of its logarithmic-derivative form."""


class RootNotFoundError(PlasmonWireError):
    """No sign change / root in the requested bracket or window."""


class NotConvergedError(PlasmonWireError):
    """Iterative solver exhausted its iteration budget.

    Carries the last iterate and residual for diagnostics.
    """

    def __init__(self, message, last=None, residual=None):
        super().__init__(message)
        self.last = last
        self.residual = residual


class DegeneratePointError(PlasmonWireError):
    """Implicit-function derivative undefined (d S / d Omega vanished)."""


class InconsistentRootError(PlasmonWireError):
    """Boundary system has no clean null vector: the point is not a mode."""


class NormalizationError(PlasmonWireError):
    """Mode cannot be normalized (non-bound or non-positive energy integral)."""


class ContractError(PlasmonWireError):
    """Operation called on an object violating its precondition."""


class BranchCutError(DomainError):
    """Evaluation requested on the branch cut of the self-energy."""


class ConfigError(PlasmonWireError, ValueError):
    """Invalid or malformed run configuration."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key
