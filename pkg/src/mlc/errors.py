"""Exception types shared across the package.

The CLI maps these onto process exit codes: usage problems exit 1,
violated preconditions (bad meshes, bad geometry, unsolvable setups)
exit 2, and numerical failures (iteration caps, stalled line searches)
exit 3.
"""


class MlcError(Exception):
    """Base class for all package errors."""


class UsageError(MlcError):
    """Malformed configuration or command line arguments."""


class MeshError(MlcError):
    """Connectivity defect: boundary, non-manifoldness, bad orientation, parse failure."""

    def __init__(self, message, simplex=None):
        super().__init__(message)
        self.simplex = simplex


class GeometryError(MlcError):
    """Metric defect: violated triangle inequality, degenerate simplex or dual cell."""

    def __init__(self, message, simplex=None):
        super().__init__(message)
        self.simplex = simplex


class PreconditionError(MlcError):
    """An operation was invoked outside its contract (coercivity, closedness, ranges)."""


class ConvergenceError(MlcError):
    """An iterative method hit its cap. Carries the residual history."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history) if history is not None else []


class LineSearchError(ConvergenceError):
    """Backtracking line search failed to produce sufficient decrease."""
