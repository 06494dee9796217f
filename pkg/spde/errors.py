"""Exception types shared by the numerical core, the experiments and the CLI."""


class LabError(Exception):
    """Base class for all errors raised by the laboratory"""


class GuardError(LabError):
    """A precondition on grid, tree, shapes or parameters was violated"""


class ConfigurationError(LabError):
    """The run configuration is unreadable, incomplete or names unknown items"""


class NonSymmetricError(LabError):
    """The diffusion matrix b is not symmetric at some sample"""

    def __init__(self, asymmetry, location=None):
        self.asymmetry = asymmetry
        self.location = location
        message = f"b is not symmetric: max |b - b^T| = {asymmetry:.3e}"
        if location is not None:
            message += f" at {location}"
        super().__init__(message)


class SingularStepError(LabError):
    """A zero pivot was met while solving an implicit step"""

    def __init__(self, level, node, pivot):
        self.level = level
        self.node = node
        self.pivot = pivot
        super().__init__(
            f"Implicit step matrix is singular at level {level}, node {node} (pivot {pivot:.3e})"
        )


class ConvergenceError(LabError):
    """The Neumann iteration did not reach the tolerance"""

    def __init__(self, iterations, residual, contraction):
        self.iterations = iterations
        self.residual = residual
        self.contraction = contraction
        super().__init__(
            f"Neumann iteration stopped after {iterations} iterations with residual "
            f"{residual:.3e} (estimated contraction factor {contraction:.4f})"
        )
