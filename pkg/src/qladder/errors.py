"""Exception hierarchy. CLI exit codes are attached to the base classes."""


class LadderError(Exception):
    exit_code = 1


class ParameterError(LadderError, ValueError):
    """Invalid model parameters or inputs."""

    exit_code = 2


class DomainError(ParameterError):
    """Argument outside the domain where a formula applies."""


class WindowError(ParameterError):
    """Fit window outside the admissible bulk of the profile."""


class NumericError(LadderError, ArithmeticError):
    exit_code = 4


class ConvergenceError(NumericError):
    """Iteration did not converge. ``last`` holds the final iterate."""

    def __init__(self, message, last=None, visited=None):
        super().__init__(message)
        self.last = last
        self.visited = visited


class NoMinimumError(NumericError):
    pass


class NoStationarySolutionError(NumericError):
    pass


class IllDefinedModelError(NumericError):
    pass


class GridTooSmallError(NumericError):
    pass


class ModelViolationError(NumericError):
    pass


class ExtinctionError(NumericError):
    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class ManifestError(LadderError, OSError):
    """Missing or unreadable run manifest / input file."""

    exit_code = 3
