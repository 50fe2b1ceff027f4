"""Exception hierarchy shared by the solver, diagnostics and CLI."""


class PhenotumorError(Exception):
    """Base class for all package errors."""


class DimensionError(PhenotumorError, ValueError):
    """Field shapes do not match the grid or trait mesh."""


class ParameterError(PhenotumorError, ValueError):
    """A model or solver parameter lies outside its admissible range."""


class DomainError(PhenotumorError, ValueError):
    """An argument lies outside the domain of a function (negative pressure, t <= 0, ...)."""


class ModeError(PhenotumorError):
    """An operation was requested in a mode that is not configured."""


class StepError(PhenotumorError, RuntimeError):
    """A time step produced NaN or negativity beyond the roundoff guard."""

    def __init__(self, message, *, t=None, min_value=None, location=None):
        super().__init__(message)
        self.t = t
        self.min_value = min_value
        self.location = location


class BoundaryContactError(StepError):
    """The population support reached the Dirichlet boundary."""


class ConfigError(PhenotumorError, ValueError):
    """Invalid run configuration. ``problems`` lists every violation found."""

    def __init__(self, message, problems=()):
        super().__init__(message)
        self.problems = list(problems)
