from BSonata.exceptions import BSonataError


class DimensionError(BSonataError):
    """Problem data with inconsistent shapes."""


class SolverFailure(BSonataError):
    """The iterative subproblem oracle missed its tolerance."""

    def __init__(self, iterations, step):
        self.iterations = iterations
        self.step = step
        super().__init__(f'prox oracle stalled after {iterations} iterations (last step {step:.3e})')


class InstanceFormatError(BSonataError):
    """A stored instance directory cannot be read back."""

    def __init__(self, message, errors=None):
        self.errors = errors or {}
        super().__init__(message)
