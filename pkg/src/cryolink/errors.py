"""Exception hierarchy shared by all cryolink modules."""


class CryolinkError(Exception):
    """Base class for every error raised by this package."""


class DomainError(CryolinkError, ValueError):
    """A parameter lies outside the domain of the operation."""


class InvalidStateError(CryolinkError, ValueError):
    """A covariance matrix violates symmetry, finiteness or the uncertainty bound."""


class ConvergenceError(CryolinkError, RuntimeError):
    """An iterative solver, root finder or quadrature did not converge."""

    def __init__(self, message, iterations=None, residual=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class IllConditionedError(CryolinkError, ValueError):
    """Input data cannot determine the requested fit parameters."""


class ConfigError(CryolinkError, ValueError):
    """An experiment configuration failed validation.

    ``errors`` holds ``(field_path, message)`` pairs.
    """

    def __init__(self, errors):
        self.errors = list(errors)
        lines = [f"{path}: {msg}" for path, msg in self.errors]
        super().__init__("invalid configuration:\n  " + "\n  ".join(lines))


class TopologyError(ConfigError):
    """Nodes and links do not form the expected topology."""

    def __init__(self, message):
        super().__init__([("topology", message)])
