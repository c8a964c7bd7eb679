"""Exception types raised across the package."""


class InvalidFieldError(ValueError):
    pass


class ModeOutOfRangeError(ValueError):
    pass


class ContractViolation(RuntimeError):
    """An input or intermediate result broke an operation's stated contract."""


class SpectralFailure(RuntimeError):
    pass


class ComputationFailed(RuntimeError):
    pass


class SolverFailure(RuntimeError):
    pass


class PositivityViolation(SolverFailure):
    pass


class NoSolutionFound(SolverFailure):
    """Newton/continuation gave up.  Not a proof that no solution exists."""


class DegeneracyError(RuntimeError):
    pass


class PreconditionError(ValueError):
    pass


class StateError(RuntimeError):
    pass
