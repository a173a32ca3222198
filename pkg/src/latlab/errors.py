"""Exception types shared across the package."""


class LatlabError(Exception):
    """Base class for all package errors."""


class DomainError(LatlabError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class PreconditionError(LatlabError, ValueError):
    """An operation was called outside the regime where it is defined."""


class ConfigError(LatlabError, ValueError):
    """Invalid experiment or sampler configuration."""


class DimensionError(PreconditionError):
    pass


class NumericalInconsistencyError(LatlabError, ArithmeticError):
    """A quantity drifted further from its admissible range than roundoff allows."""


class SingularityError(LatlabError, ArithmeticError):
    pass


class NotRepresentableError(LatlabError, ValueError):
    """A target angle vector is not in the image of the frame angle map."""


class ResourceError(LatlabError, RuntimeError):
    """A work budget (enumeration nodes, wall time) was exhausted."""


class StateError(LatlabError, RuntimeError):
    pass


class DegenerateConfigError(ConfigError):
    pass
