"""Exception types shared across the package."""


class DeploymentError(Exception):
    """Base class for every error raised by this package."""


class CoincidentNodesError(DeploymentError):
    """Two connected nodes are closer than the minimum separation."""


class SingularInformationError(DeploymentError):
    """The information matrix is singular or too ill-conditioned to invert."""


class BarrierViolationError(DeploymentError):
    """A constrained link is at or beyond its hard distance limit."""


class SolverDivergenceError(DeploymentError):
    """The iterative solver residual grew far past its initial value."""


class SolverStalledError(DeploymentError):
    """The iterative solver exhausted its round budget above tolerance."""


class StepSearchError(DeploymentError):
    """Backtracking line search could not find a decreasing step."""


class ScenarioFormatError(DeploymentError):
    """A scenario document is malformed or internally inconsistent."""
