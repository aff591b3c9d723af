"""Exception types shared across the package."""


class SlagflowError(Exception):
    """Base class for all package errors."""


class DomainError(SlagflowError):
    """A point lies outside the working domain of an ambient structure."""


class ConstructionError(SlagflowError):
    """A mesh or ambient structure could not be built consistently."""


class AmplitudeError(SlagflowError):
    """A perturbation is too large to keep the metric positive definite."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class DegeneracyError(SlagflowError):
    """A symplectic form became numerically degenerate."""


class ResolutionError(SlagflowError):
    """Finite-difference step underflow near a domain boundary."""


class StiffnessError(SlagflowError):
    """A flow step was rejected repeatedly."""

    def __init__(self, message, vertex=None):
        super().__init__(message)
        self.vertex = vertex


class SingularityError(SlagflowError):
    """Curvature blow-up detected along a flow."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class NumericError(SlagflowError):
    """An iterative numerical routine failed to converge."""


class AmbiguityError(SlagflowError):
    """Cycle matching between nearby fibers was ambiguous."""


class ClassificationError(SlagflowError):
    """An intersection graph matched no affine ADE diagram."""


class ConfigError(SlagflowError):
    """An experiment configuration is invalid or incomplete."""
