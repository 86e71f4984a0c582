class GreedyLabError(Exception):
    """Base class for every error raised by greedylab."""


class DomainError(GreedyLabError, ValueError):
    """An argument lies outside the mathematical domain of the operation."""


class ContractError(GreedyLabError, ValueError):
    """A documented precondition of an operation does not hold."""


class BudgetError(GreedyLabError):
    """A search or enumeration would exceed its configured cap."""

    def __init__(self, message, needed=None, cap=None):
        super().__init__(message)
        self.needed = needed
        self.cap = cap


class CapacityError(GreedyLabError):
    """An index range or explicit object is too large to represent."""


class ConfigError(GreedyLabError):
    """An experiment configuration failed validation.

    ``pointer`` is the slash-separated path of the offending field.
    """

    def __init__(self, message, pointer=""):
        super().__init__(message)
        self.pointer = pointer

    def __str__(self):
        if self.pointer:
            return f"{self.pointer}: {super().__str__()}"
        return super().__str__()
