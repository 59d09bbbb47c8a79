"""Exception hierarchy shared by all modules."""


class MarketError(ValueError):
    """Base class for errors raised on malformed market data or arguments."""


class NotAnEdgeError(MarketError):
    """A student-school pair is not mutually acceptable."""


class InvalidMatchingError(MarketError):
    """A matching violates acceptability or capacity constraints."""


class UnstableMatchingError(MarketError):
    """An operation that requires a weakly stable matching received an unstable one."""


class NotStrictError(MarketError):
    """A strict-priority algorithm was called on an instance with ties."""


class BudgetExceededError(MarketError):
    """An exhaustive computation would exceed its configured budget."""


class InstanceFormatError(MarketError):
    """An instance, distribution or record document failed validation."""


class SolverError(RuntimeError):
    """An LP/MILP backend failed or is unavailable."""
