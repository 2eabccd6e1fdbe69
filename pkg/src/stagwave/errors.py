"""Exception hierarchy shared by all stagwave modules."""


class StagwaveError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(StagwaveError, ValueError):
    """Invalid physical or numerical parameters (e.g. zero surface shear)."""


class NumericalError(StagwaveError, RuntimeError):
    """An integrator or root finder did not reach the requested accuracy."""

    def __init__(self, message, achieved_tol=None):
        super().__init__(message)
        self.achieved_tol = achieved_tol


class DomainError(StagwaveError, ValueError):
    """A wave state left the admissible open set."""

    def __init__(self, message, invariant=None, location=None):
        super().__init__(message)
        self.invariant = invariant
        self.location = location


class PreconditionError(StagwaveError, ValueError):
    """An operation was called outside its documented precondition."""


class BifurcationValidationError(StagwaveError):
    """Kernel is not one-dimensional or the transversality condition fails."""


class NewtonFailure(StagwaveError, RuntimeError):
    """Newton iteration diverged or left the admissible set."""

    def __init__(self, message, trace=()):
        super().__init__(message)
        self.trace = list(trace)


class ConfigError(StagwaveError, ValueError):
    """Malformed run configuration."""
