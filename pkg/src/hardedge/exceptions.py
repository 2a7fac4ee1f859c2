"""Exception types shared across the package."""


class ParameterError(ValueError):
    """A parameter lies outside its admissible domain."""


class ConvergenceError(RuntimeError):
    """An iterative method did not reach its tolerance."""


class SingularityError(ZeroDivisionError):
    """A matrix that must be inverted has a zero pivot."""


class StepSizeError(RuntimeError):
    """An integration step is too coarse to resolve the dynamics."""
