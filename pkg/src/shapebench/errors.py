"""Exception classes shared across the package."""


class ShapebenchError(Exception):
    pass


class ContractViolation(ShapebenchError, ValueError):
    """An argument broke a documented precondition (bad dimension, bad axis, ...)."""


class ConfigError(ShapebenchError, ValueError):
    """A configuration value or document is invalid.

    ``key`` names the offending configuration key when one is known.
    """

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class EmptyGridError(ShapebenchError):
    pass


class BudgetExceeded(ShapebenchError):
    pass


class ObjectiveError(ShapebenchError):
    """Base class for failures of an external objective."""


class EvaluationTimeout(ObjectiveError):
    pass


class ProtocolError(ObjectiveError):
    pass


class ProcessError(ObjectiveError):
    pass
